#pragma once

#include <cstdint>
#include <random>

namespace ucate {

// SplitMix64 mixing step.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Decorrelated stream seed for (master, replicate, arm). Every stochastic
// routine derives its substreams through this, which is what makes results
// independent of execution order and thread count.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t replicate,
                                   std::uint64_t arm = 0) {
  std::uint64_t s = splitmix64(master ^ 0x5851f42d4c957f2dULL);
  s = splitmix64(s ^ splitmix64(replicate));
  s = splitmix64(s ^ splitmix64(arm ^ 0xda3e39cb94b95bdbULL));
  return s;
}

// Standard-normal stream. Draw order is part of the determinism contract:
// callers must consume draws in a fixed sequence.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double unit() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ucate

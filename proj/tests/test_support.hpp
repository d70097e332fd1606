#pragma once

#include <random>
#include <vector>

#include "ucate/estimator.hpp"
#include "ucate/sem.hpp"
#include "ucate/synth.hpp"

namespace test_support {

// Stable random coefficient set: |beta3| < 1 and |alpha1| < 1 keep the
// recursion bounded over the horizons used in tests.
inline ucate::sem::SemCoefficients random_stable_coeffs(std::mt19937_64& rng,
                                                        double sigma_b = 0.0,
                                                        double sigma_l = 0.0) {
  std::uniform_real_distribution<double> wide(-2.0, 2.0);
  std::uniform_real_distribution<double> ar(-0.9, 0.9);
  std::uniform_real_distribution<double> cross(-0.5, 0.5);

  ucate::sem::SemCoefficients c;
  c.beta(0) = wide(rng);
  c.beta(1) = wide(rng);
  c.beta(2) = wide(rng);
  c.beta(3) = ar(rng);
  c.beta(4) = cross(rng);
  c.beta(5) = cross(rng);
  c.alpha(0) = wide(rng);
  c.alpha(1) = ar(rng);
  c.alpha(2) = wide(rng);
  c.alpha(3) = wide(rng);
  c.sigma2_b = sigma_b * sigma_b;
  c.sigma2_l = sigma_l * sigma_l;
  return c;
}

inline ucate::synth::GeneratorSpec mini_case_spec() {
  ucate::synth::GeneratorSpec spec;
  spec.beta << 0.0, -2.0, 0.0, 0.5, 0.0, 0.0;
  spec.alpha.setZero();
  spec.timepoints = 3;
  spec.regime = ucate::estimator::Regime::treated_from(3, 1);
  spec.b1 = 10.0;
  spec.l1 = 0.0;
  return spec;
}

inline ucate::timeline::SeriesView series_from_trajectory(const ucate::sem::Trajectory& traj) {
  ucate::timeline::SeriesView series;
  series.b = traj.b;
  series.l = traj.l;
  series.a = traj.a;
  return series;
}

}  // namespace test_support

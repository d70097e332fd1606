#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ucate/common.hpp"
#include "ucate/sem.hpp"
#include "ucate/timeline.hpp"

namespace ucate::estimator {

// A full assignment of the target-drug exposure over the scenario window.
struct Regime {
  std::vector<int> a;
  std::string label;
  std::optional<std::size_t> switch_index;  // first treated index, when applicable

  static Regime always(std::size_t t_points);
  static Regime never(std::size_t t_points);
  static Regime treated_from(std::size_t t_points, std::size_t switch_index);
  static Regime custom(std::vector<int> a, std::string label);

  std::size_t size() const { return a.size(); }
};

enum class EffectMethod { mc, analytic };
enum class WindowPolicy { post_only, full };
enum class TreatedRegimePolicy { from_switch, always_one };

struct EstimateSettings {
  EffectMethod method = EffectMethod::mc;
  WindowPolicy window_policy = WindowPolicy::post_only;
  TreatedRegimePolicy treated_policy = TreatedRegimePolicy::from_switch;
  int n_mc = 500;
  int n_boot = 1000;
  double ci_level = 0.95;
  std::uint64_t seed = 0;
  bool shared_noise = true;
  int threads = 1;
};

struct EffectEstimate {
  double point = 0.0;
  double ci_level = 0.95;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
  IndexRange window;
  int n_mc = 0;
  int n_boot = 0;
  std::uint64_t seed = 0;
  EffectMethod method = EffectMethod::mc;
  std::optional<double> naive_difference;
  std::string subject_context;
  std::vector<int> regime_treated;
  std::vector<int> regime_control;
  int bootstrap_discarded = 0;
  std::vector<std::string> warnings;
};

// Expected trajectory under a regime: the disturbance terms have mean zero
// and the system is linear, so the expectation follows the same recursion
// with the noise dropped. This is the exact counterfactual-mean route.
sem::Trajectory analytic_counterfactual_means(const sem::SemCoefficients& coeffs,
                                              const Regime& regime, double b1, double l1);

// Mean over the window of E[B_treated] - E[B_control].
double analytic_effect(const sem::SemCoefficients& coeffs, const Regime& treated,
                       const Regime& control, const IndexRange& window, double b1,
                       double l1);

struct McOptions {
  int n_mc = 500;
  std::uint64_t seed = 0;
  bool shared_noise = true;  // one noise stream per replicate, reused by both arms
  int threads = 1;
};

struct GcomputeResult {
  double point = 0.0;
  double se = 0.0;  // standard error of the point estimate across replicates
  int n_mc = 0;
};

// g-computation Monte Carlo: simulates both regimes per replicate and
// averages the per-replicate window-mean differences in replicate order.
GcomputeResult gcompute_mc(const sem::SemCoefficients& coeffs, double b1, double l1,
                           const Regime& treated, const Regime& control,
                           const IndexRange& window, const McOptions& options);

// Per-timepoint Monte Carlo means of both arms, matching gcompute_mc's
// replicate streams; used for trajectory emission.
struct McTrajectories {
  sem::Trajectory treated_mean;
  sem::Trajectory control_mean;
};
McTrajectories mc_mean_trajectories(const sem::SemCoefficients& coeffs, double b1,
                                    double l1, const Regime& treated,
                                    const Regime& control, const McOptions& options);

struct BootstrapOptions {
  int n_boot = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct BootstrapResult {
  double lo = 0.0;
  double hi = 0.0;
  int discarded = 0;
  int used = 0;
};

// Dataset-level parametric bootstrap: per replicate, simulate a full
// trajectory from the fitted coefficients under the observed regime (keeping
// the observed initial values), refit both equations, and re-estimate the
// effect analytically. Percentile interval over replicates; rank-deficient
// refits are discarded, more than 5% discarded is an error.
BootstrapResult bootstrap_ci(const sem::SemCoefficients& coeffs,
                             const timeline::SeriesView& observed, const Regime& treated,
                             const Regime& control, const IndexRange& window,
                             const BootstrapOptions& options);

// Convenience overload that fits on the scenario rows first.
BootstrapResult bootstrap_ci(const timeline::AlignedTimeline& scenario_rows,
                             const std::string& target, const BootstrapOptions& options,
                             WindowPolicy window_policy = WindowPolicy::post_only);

// mean(post-switch values) - mean(pre-switch values).
double naive_mean_difference(const std::vector<double>& biomarker,
                             std::size_t switch_index);

// Point estimate for the scenario's regimes (no CI; the scenario carries no
// observed series to bootstrap from).
EffectEstimate ucate(const sem::SemCoefficients& coeffs, double b1, double l1,
                     const timeline::AdditionScenario& scenario,
                     const EstimateSettings& settings);

// Full estimate on an observed scenario window: point estimate by the chosen
// method, parametric-bootstrap CI, and the naive pre/post contrast.
EffectEstimate estimate_effect(const sem::SemCoefficients& coeffs,
                               const timeline::SeriesView& observed,
                               std::size_t switch_index, const EstimateSettings& settings);

}  // namespace ucate::estimator

#include "ucate/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ucate/rng.hpp"

namespace ucate::estimator {

namespace {

constexpr std::uint64_t kArmShared = 0;
constexpr std::uint64_t kArmTreated = 1;
constexpr std::uint64_t kArmControl = 2;
constexpr std::uint64_t kArmBootstrap = 3;

void check_regimes(const Regime& treated, const Regime& control) {
  if (treated.size() != control.size()) throw input_error("regimes must share one length");
  if (treated.size() < 2) throw input_error("regimes need at least 2 timepoints");
}

void check_window(const IndexRange& window, std::size_t t_points) {
  if (window.first > window.last) throw input_error("empty window");
  if (window.last >= t_points) throw input_error("window exceeds the scenario length");
}

// Type-7 quantile on a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t m = sorted.size();
  if (m == 1) return sorted[0];
  const double h = static_cast<double>(m - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, m - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double window_mean_difference(const std::vector<double>& treated,
                              const std::vector<double>& control,
                              const IndexRange& window) {
  double sum = 0.0;
  for (std::size_t t = window.first; t <= window.last; ++t) {
    sum += treated[t] - control[t];
  }
  return sum / static_cast<double>(window.size());
}

const char* default_subject_context() {
  return "Effect conditioned on this subject's baseline characteristics; "
         "a single-patient contrast, not transportable across patients.";
}

}  // namespace

Regime Regime::always(std::size_t t_points) {
  Regime r;
  r.a.assign(t_points, 1);
  r.label = "always";
  r.switch_index = 0;
  return r;
}

Regime Regime::never(std::size_t t_points) {
  Regime r;
  r.a.assign(t_points, 0);
  r.label = "never";
  return r;
}

Regime Regime::treated_from(std::size_t t_points, std::size_t switch_index) {
  if (switch_index > t_points) throw input_error("switch index beyond regime length");
  Regime r;
  r.a.assign(t_points, 0);
  for (std::size_t t = switch_index; t < t_points; ++t) r.a[t] = 1;
  r.label = "treated_from_" + std::to_string(switch_index);
  r.switch_index = switch_index;
  return r;
}

Regime Regime::custom(std::vector<int> a, std::string label) {
  for (int v : a) {
    if (v != 0 && v != 1) throw input_error("regime values must be 0 or 1");
  }
  Regime r;
  r.a = std::move(a);
  r.label = std::move(label);
  return r;
}

sem::Trajectory analytic_counterfactual_means(const sem::SemCoefficients& coeffs,
                                              const Regime& regime, double b1, double l1) {
  const auto& a = regime.a;
  const std::size_t t_points = a.size();
  if (t_points < 2) throw input_error("regimes need at least 2 timepoints");

  sem::Trajectory traj;
  traj.b.resize(t_points);
  traj.l.resize(t_points);
  traj.a = a;
  traj.b[0] = b1;
  traj.l[0] = l1;
  const auto& beta = coeffs.beta;
  const auto& alpha = coeffs.alpha;
  for (std::size_t t = 1; t < t_points; ++t) {
    traj.l[t] = alpha(0) + alpha(1) * traj.l[t - 1] + alpha(2) * a[t - 1] +
                alpha(3) * a[t] + 0.0;
    traj.b[t] = beta(0) + beta(1) * a[t] + beta(2) * a[t - 1] + beta(3) * traj.b[t - 1] +
                beta(4) * traj.l[t - 1] + beta(5) * traj.l[t] + 0.0;
    if (!std::isfinite(traj.b[t]) || !std::isfinite(traj.l[t])) {
      throw estimation_error("simulation diverged at index " + std::to_string(t));
    }
  }
  return traj;
}

double analytic_effect(const sem::SemCoefficients& coeffs, const Regime& treated,
                       const Regime& control, const IndexRange& window, double b1,
                       double l1) {
  check_regimes(treated, control);
  check_window(window, treated.size());
  const auto mean_treated = analytic_counterfactual_means(coeffs, treated, b1, l1);
  const auto mean_control = analytic_counterfactual_means(coeffs, control, b1, l1);
  return window_mean_difference(mean_treated.b, mean_control.b, window);
}

GcomputeResult gcompute_mc(const sem::SemCoefficients& coeffs, double b1, double l1,
                           const Regime& treated, const Regime& control,
                           const IndexRange& window, const McOptions& options) {
  check_regimes(treated, control);
  check_window(window, treated.size());
  if (options.n_mc < 1) throw input_error("n_mc must be >= 1");

  const std::size_t t_points = treated.size();
  const std::size_t n = static_cast<std::size_t>(options.n_mc);
  const double sigma_l = std::sqrt(coeffs.sigma2_l);
  const double sigma_b = std::sqrt(coeffs.sigma2_b);

  std::vector<double> diffs(n, 0.0);
  parallel_for_index(n, options.threads, [&](std::size_t i) {
    sem::Trajectory traj_treated;
    sem::Trajectory traj_control;
    if (options.shared_noise) {
      GaussianStream stream(derive_stream(options.seed, i, kArmShared));
      std::vector<double> eps_l(t_points - 1);
      std::vector<double> eps_b(t_points - 1);
      for (std::size_t t = 0; t + 1 < t_points; ++t) {
        eps_l[t] = sigma_l * stream.unit();
        eps_b[t] = sigma_b * stream.unit();
      }
      traj_treated = sem::simulate_with_noise(coeffs, b1, l1, treated.a, eps_l, eps_b);
      traj_control = sem::simulate_with_noise(coeffs, b1, l1, control.a, eps_l, eps_b);
    } else {
      traj_treated = sem::simulate_forward(coeffs, b1, l1, treated.a,
                                           derive_stream(options.seed, i, kArmTreated));
      traj_control = sem::simulate_forward(coeffs, b1, l1, control.a,
                                           derive_stream(options.seed, i, kArmControl));
    }
    diffs[i] = window_mean_difference(traj_treated.b, traj_control.b, window);
  });

  GcomputeResult result;
  result.n_mc = options.n_mc;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += diffs[i];
  result.point = sum / static_cast<double>(n);
  if (n >= 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = diffs[i] - result.point;
      ss += d * d;
    }
    result.se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return result;
}

McTrajectories mc_mean_trajectories(const sem::SemCoefficients& coeffs, double b1,
                                    double l1, const Regime& treated,
                                    const Regime& control, const McOptions& options) {
  check_regimes(treated, control);
  if (options.n_mc < 1) throw input_error("n_mc must be >= 1");

  const std::size_t t_points = treated.size();
  const std::size_t n = static_cast<std::size_t>(options.n_mc);
  const double sigma_l = std::sqrt(coeffs.sigma2_l);
  const double sigma_b = std::sqrt(coeffs.sigma2_b);

  // Per-replicate rows, reduced in index order afterwards.
  std::vector<std::vector<double>> rows(n);
  parallel_for_index(n, options.threads, [&](std::size_t i) {
    sem::Trajectory traj_treated;
    sem::Trajectory traj_control;
    if (options.shared_noise) {
      GaussianStream stream(derive_stream(options.seed, i, kArmShared));
      std::vector<double> eps_l(t_points - 1);
      std::vector<double> eps_b(t_points - 1);
      for (std::size_t t = 0; t + 1 < t_points; ++t) {
        eps_l[t] = sigma_l * stream.unit();
        eps_b[t] = sigma_b * stream.unit();
      }
      traj_treated = sem::simulate_with_noise(coeffs, b1, l1, treated.a, eps_l, eps_b);
      traj_control = sem::simulate_with_noise(coeffs, b1, l1, control.a, eps_l, eps_b);
    } else {
      traj_treated = sem::simulate_forward(coeffs, b1, l1, treated.a,
                                           derive_stream(options.seed, i, kArmTreated));
      traj_control = sem::simulate_forward(coeffs, b1, l1, control.a,
                                           derive_stream(options.seed, i, kArmControl));
    }
    std::vector<double> row;
    row.reserve(4 * t_points);
    row.insert(row.end(), traj_treated.b.begin(), traj_treated.b.end());
    row.insert(row.end(), traj_treated.l.begin(), traj_treated.l.end());
    row.insert(row.end(), traj_control.b.begin(), traj_control.b.end());
    row.insert(row.end(), traj_control.l.begin(), traj_control.l.end());
    rows[i] = std::move(row);
  });

  McTrajectories out;
  out.treated_mean.b.assign(t_points, 0.0);
  out.treated_mean.l.assign(t_points, 0.0);
  out.treated_mean.a = treated.a;
  out.control_mean.b.assign(t_points, 0.0);
  out.control_mean.l.assign(t_points, 0.0);
  out.control_mean.a = control.a;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < t_points; ++t) {
      out.treated_mean.b[t] += rows[i][t];
      out.treated_mean.l[t] += rows[i][t_points + t];
      out.control_mean.b[t] += rows[i][2 * t_points + t];
      out.control_mean.l[t] += rows[i][3 * t_points + t];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < t_points; ++t) {
    out.treated_mean.b[t] *= inv;
    out.treated_mean.l[t] *= inv;
    out.control_mean.b[t] *= inv;
    out.control_mean.l[t] *= inv;
  }
  return out;
}

BootstrapResult bootstrap_ci(const sem::SemCoefficients& coeffs,
                             const timeline::SeriesView& observed, const Regime& treated,
                             const Regime& control, const IndexRange& window,
                             const BootstrapOptions& options) {
  check_regimes(treated, control);
  check_window(window, treated.size());
  if (observed.size() != treated.size()) {
    throw input_error("observed series and regimes must share one length");
  }
  if (options.n_boot < 1) throw input_error("n_boot must be >= 1");
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw input_error("ci level must be in (0, 1)");
  }

  const std::size_t n = static_cast<std::size_t>(options.n_boot);
  const double b1 = observed.b.front();
  const double l1 = observed.l.front();

  std::vector<double> effects(n, std::numeric_limits<double>::quiet_NaN());
  parallel_for_index(n, options.threads, [&](std::size_t rep) {
    const auto traj = sem::simulate_forward(coeffs, b1, l1, observed.a,
                                            derive_stream(options.seed, rep, kArmBootstrap));
    timeline::SeriesView simulated;
    simulated.b = traj.b;
    simulated.l = traj.l;
    simulated.a = observed.a;
    sem::SemCoefficients refit;
    try {
      refit = sem::fit_sem(simulated);
    } catch (const rank_error&) {
      return;  // replicate discarded
    }
    effects[rep] = analytic_effect(refit, treated, control, window, b1, l1);
  });

  std::vector<double> kept;
  kept.reserve(n);
  for (double e : effects) {
    if (std::isfinite(e)) kept.push_back(e);
  }
  BootstrapResult result;
  result.used = static_cast<int>(kept.size());
  result.discarded = options.n_boot - result.used;
  if (static_cast<double>(result.discarded) > 0.05 * static_cast<double>(options.n_boot)) {
    std::ostringstream msg;
    msg << "bootstrap unstable: " << result.discarded << " of " << options.n_boot
        << " replicates discarded (rank-deficient refits)";
    throw estimation_error(msg.str());
  }
  std::sort(kept.begin(), kept.end());
  const double alpha = 1.0 - options.level;
  result.lo = quantile_sorted(kept, alpha / 2.0);
  result.hi = quantile_sorted(kept, 1.0 - alpha / 2.0);
  return result;
}

BootstrapResult bootstrap_ci(const timeline::AlignedTimeline& scenario_rows,
                             const std::string& target, const BootstrapOptions& options,
                             WindowPolicy window_policy) {
  const auto observed = timeline::extract_series(scenario_rows, target);
  const auto coeffs = sem::fit_sem(observed);
  const std::size_t t_points = observed.size();
  const auto first_treated = std::find(observed.a.begin(), observed.a.end(), 1);
  if (first_treated == observed.a.end()) {
    throw input_error("observed series has no treated timepoints");
  }
  const std::size_t switch_index =
      static_cast<std::size_t>(first_treated - observed.a.begin());
  const Regime treated = Regime::treated_from(t_points, switch_index);
  const Regime control = Regime::never(t_points);
  const IndexRange window = (window_policy == WindowPolicy::post_only)
                                ? IndexRange{switch_index, t_points - 1}
                                : IndexRange{0, t_points - 1};
  return bootstrap_ci(coeffs, observed, treated, control, window, options);
}

double naive_mean_difference(const std::vector<double>& biomarker,
                             std::size_t switch_index) {
  if (switch_index == 0 || switch_index >= biomarker.size()) {
    throw input_error("empty window for the naive pre/post contrast");
  }
  double pre = 0.0;
  for (std::size_t t = 0; t < switch_index; ++t) pre += biomarker[t];
  pre /= static_cast<double>(switch_index);
  double post = 0.0;
  for (std::size_t t = switch_index; t < biomarker.size(); ++t) post += biomarker[t];
  post /= static_cast<double>(biomarker.size() - switch_index);
  return post - pre;
}

namespace {

struct RegimePair {
  Regime treated;
  Regime control;
  IndexRange window;
};

RegimePair regimes_for(std::size_t t_points, std::size_t switch_index,
                       const EstimateSettings& settings) {
  if (switch_index >= t_points) throw input_error("switch index beyond scenario length");
  RegimePair pair;
  pair.treated = (settings.treated_policy == TreatedRegimePolicy::always_one)
                     ? Regime::always(t_points)
                     : Regime::treated_from(t_points, switch_index);
  pair.control = Regime::never(t_points);
  pair.window = (settings.window_policy == WindowPolicy::post_only)
                    ? IndexRange{switch_index, t_points - 1}
                    : IndexRange{0, t_points - 1};
  return pair;
}

}  // namespace

EffectEstimate ucate(const sem::SemCoefficients& coeffs, double b1, double l1,
                     const timeline::AdditionScenario& scenario,
                     const EstimateSettings& settings) {
  const std::size_t t_points = scenario.total_points;
  const auto pair = regimes_for(t_points, scenario.switch_offset(), settings);

  EffectEstimate estimate;
  estimate.method = settings.method;
  estimate.ci_level = settings.ci_level;
  estimate.window = pair.window;
  estimate.seed = settings.seed;
  estimate.subject_context = default_subject_context();
  estimate.regime_treated = pair.treated.a;
  estimate.regime_control = pair.control.a;
  if (settings.method == EffectMethod::analytic) {
    estimate.point = analytic_effect(coeffs, pair.treated, pair.control, pair.window, b1, l1);
  } else {
    McOptions mc;
    mc.n_mc = settings.n_mc;
    mc.seed = settings.seed;
    mc.shared_noise = settings.shared_noise;
    mc.threads = settings.threads;
    estimate.point =
        gcompute_mc(coeffs, b1, l1, pair.treated, pair.control, pair.window, mc).point;
    estimate.n_mc = settings.n_mc;
  }
  return estimate;
}

EffectEstimate estimate_effect(const sem::SemCoefficients& coeffs,
                               const timeline::SeriesView& observed,
                               std::size_t switch_index,
                               const EstimateSettings& settings) {
  const std::size_t t_points = observed.size();
  if (t_points < 2) throw input_error("scenario needs at least 2 timepoints");
  const auto pair = regimes_for(t_points, switch_index, settings);

  EffectEstimate estimate;
  estimate.method = settings.method;
  estimate.ci_level = settings.ci_level;
  estimate.window = pair.window;
  estimate.seed = settings.seed;
  estimate.subject_context = default_subject_context();
  estimate.regime_treated = pair.treated.a;
  estimate.regime_control = pair.control.a;

  const double b1 = observed.b.front();
  const double l1 = observed.l.front();
  if (settings.method == EffectMethod::analytic) {
    estimate.point =
        analytic_effect(coeffs, pair.treated, pair.control, pair.window, b1, l1);
  } else {
    McOptions mc;
    mc.n_mc = settings.n_mc;
    mc.seed = settings.seed;
    mc.shared_noise = settings.shared_noise;
    mc.threads = settings.threads;
    estimate.point =
        gcompute_mc(coeffs, b1, l1, pair.treated, pair.control, pair.window, mc).point;
    estimate.n_mc = settings.n_mc;
  }

  estimate.naive_difference = naive_mean_difference(observed.b, switch_index);

  if (settings.n_boot > 0) {
    BootstrapOptions boot;
    boot.n_boot = settings.n_boot;
    boot.level = settings.ci_level;
    boot.seed = settings.seed;
    boot.threads = settings.threads;
    const auto ci =
        bootstrap_ci(coeffs, observed, pair.treated, pair.control, pair.window, boot);
    estimate.ci_lo = ci.lo;
    estimate.ci_hi = ci.hi;
    estimate.n_boot = settings.n_boot;
    estimate.bootstrap_discarded = ci.discarded;
    if (estimate.point < ci.lo || estimate.point > ci.hi) {
      std::ostringstream msg;
      msg << "point estimate " << estimate.point << " lies outside the percentile interval ["
          << ci.lo << ", " << ci.hi << "]";
      estimate.warnings.push_back(msg.str());
    }
  }
  return estimate;
}

}  // namespace ucate::estimator

#include <cmath>
#include <random>

#include "doctest.h"

#include "test_support.hpp"
#include "ucate/estimator.hpp"
#include "ucate/rng.hpp"
#include "ucate/synth.hpp"

using namespace ucate;
using namespace ucate::estimator;

namespace {

sem::SemCoefficients mini_coeffs(double sigma_b = 0.0, double sigma_l = 0.0) {
  sem::SemCoefficients coeffs;
  coeffs.beta << 0.0, -2.0, 0.0, 0.5, 0.0, 0.0;
  coeffs.sigma2_b = sigma_b * sigma_b;
  coeffs.sigma2_l = sigma_l * sigma_l;
  return coeffs;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("regime constructors") {
  const auto always = Regime::always(4);
  CHECK(always.a == std::vector<int>{1, 1, 1, 1});
  const auto never = Regime::never(4);
  CHECK(never.a == std::vector<int>{0, 0, 0, 0});
  const auto from2 = Regime::treated_from(5, 2);
  CHECK(from2.a == std::vector<int>{0, 0, 1, 1, 1});
  CHECK(from2.switch_index == 2);
  CHECK_THROWS_AS(Regime::custom({0, 2}, "bad"), input_error);
}

TEST_CASE("analytic counterfactual means reproduce the hand recursion") {
  const auto coeffs = mini_coeffs();
  const auto treated = analytic_counterfactual_means(coeffs, Regime::treated_from(3, 1), 10.0, 0.0);
  CHECK(treated.b == std::vector<double>{10.0, 3.0, -0.5});
  const auto control = analytic_counterfactual_means(coeffs, Regime::never(3), 10.0, 0.0);
  CHECK(control.b == std::vector<double>{10.0, 5.0, 2.5});
}

TEST_CASE("analytic effect on the mini-case is exactly -2.5") {
  const auto coeffs = mini_coeffs();
  const double effect = analytic_effect(coeffs, Regime::treated_from(3, 1), Regime::never(3),
                                        IndexRange{1, 2}, 10.0, 0.0);
  CHECK(effect == -2.5);
}

TEST_CASE("treatment-disconnected coefficients give identical trajectories") {
  std::mt19937_64 rng(21);
  auto coeffs = test_support::random_stable_coeffs(rng);
  coeffs.beta(1) = 0.0;
  coeffs.beta(2) = 0.0;
  coeffs.alpha(2) = 0.0;
  coeffs.alpha(3) = 0.0;
  const auto a = analytic_counterfactual_means(coeffs, Regime::always(10), 4.0, 2.0);
  const auto b = analytic_counterfactual_means(coeffs, Regime::never(10), 4.0, 2.0);
  CHECK(a.b == b.b);
  CHECK(a.l == b.l);
  CHECK(analytic_effect(coeffs, Regime::always(10), Regime::never(10), IndexRange{0, 9},
                        4.0, 2.0) == 0.0);
}

TEST_CASE("regime antisymmetry is exact") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const auto coeffs = test_support::random_stable_coeffs(rng);
    const auto treated = Regime::treated_from(12, 4);
    const auto control = Regime::never(12);
    const IndexRange window{4, 11};
    const double forward = analytic_effect(coeffs, treated, control, window, 3.0, 1.0);
    const double backward = analytic_effect(coeffs, control, treated, window, 3.0, 1.0);
    CHECK(forward == -backward);
  }
}

TEST_CASE("window additivity: window mean equals mean of per-index effects") {
  std::mt19937_64 rng(23);
  const auto coeffs = test_support::random_stable_coeffs(rng);
  const auto treated = Regime::treated_from(10, 3);
  const auto control = Regime::never(10);
  const IndexRange window{3, 9};
  const double whole = analytic_effect(coeffs, treated, control, window, 2.0, 1.0);
  double accumulated = 0.0;
  for (std::size_t t = window.first; t <= window.last; ++t) {
    accumulated += analytic_effect(coeffs, treated, control, IndexRange{t, t}, 2.0, 1.0);
  }
  accumulated /= static_cast<double>(window.size());
  CHECK(whole == doctest::Approx(accumulated).epsilon(1e-12));
}

TEST_CASE("analytic means equal the monte carlo oracle at every timepoint") {
  std::mt19937_64 rng(24);
  auto coeffs = test_support::random_stable_coeffs(rng, 1.0, 0.5);
  const auto regime = Regime::treated_from(8, 3);
  const auto expected = analytic_counterfactual_means(coeffs, regime, 5.0, 2.0);

  const int n = 1000000;
  const std::size_t t_points = regime.size();
  std::vector<double> sum(t_points, 0.0);
  std::vector<double> sumsq(t_points, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto traj =
        sem::simulate_forward(coeffs, 5.0, 2.0, regime.a,
                              derive_stream(4242, static_cast<std::uint64_t>(i)));
    for (std::size_t t = 0; t < t_points; ++t) {
      sum[t] += traj.b[t];
      sumsq[t] += traj.b[t] * traj.b[t];
    }
  }
  for (std::size_t t = 0; t < t_points; ++t) {
    const double mean = sum[t] / n;
    const double var = std::max(0.0, sumsq[t] / n - mean * mean);
    const double se = std::sqrt(var / n);
    CHECK(std::abs(mean - expected.b[t]) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("gcompute_mc equals the hand value when noise is zero") {
  const auto coeffs = mini_coeffs();
  McOptions options;
  options.n_mc = 500;
  options.seed = 1;
  const auto result = gcompute_mc(coeffs, 10.0, 0.0, Regime::treated_from(3, 1),
                                  Regime::never(3), IndexRange{1, 2}, options);
  CHECK(std::abs(result.point - (-2.5)) <= 1e-12);
  CHECK(result.se <= 1e-12);
}

TEST_CASE("gcompute_mc with zero variances equals the analytic method") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const auto coeffs = test_support::random_stable_coeffs(rng);
    const auto treated = Regime::treated_from(9, 4);
    const auto control = Regime::never(9);
    const IndexRange window{4, 8};
    const double analytic = analytic_effect(coeffs, treated, control, window, 3.0, 2.0);
    McOptions options;
    options.n_mc = 64;
    options.seed = static_cast<std::uint64_t>(trial);
    const auto mc = gcompute_mc(coeffs, 3.0, 2.0, treated, control, window, options);
    CHECK(std::abs(mc.point - analytic) <= 1e-12);
  }
}

TEST_CASE("identical regimes give exactly zero under shared noise") {
  const auto coeffs = mini_coeffs(2.0, 1.0);
  McOptions options;
  options.n_mc = 200;
  options.seed = 9;
  options.shared_noise = true;
  const auto regime = Regime::treated_from(6, 2);
  const auto result =
      gcompute_mc(coeffs, 10.0, 3.0, regime, regime, IndexRange{2, 5}, options);
  CHECK(result.point == 0.0);
  CHECK(result.se == 0.0);
}

TEST_CASE("mini-case monte carlo lands within three standard errors") {
  const auto coeffs = mini_coeffs(1.0, 0.5);
  McOptions options;
  options.n_mc = 500;
  options.seed = 31;
  const auto result = gcompute_mc(coeffs, 10.0, 0.0, Regime::treated_from(3, 1),
                                  Regime::never(3), IndexRange{1, 2}, options);
  CHECK(std::abs(result.point - (-2.5)) <= 3.0 * result.se);
}

TEST_CASE("gcompute_mc rejects bad windows and replicate counts") {
  const auto coeffs = mini_coeffs();
  McOptions options;
  options.seed = 1;
  CHECK_THROWS_AS(gcompute_mc(coeffs, 1.0, 0.0, Regime::treated_from(3, 1), Regime::never(3),
                              IndexRange{2, 1}, options),
                  input_error);
  CHECK_THROWS_AS(gcompute_mc(coeffs, 1.0, 0.0, Regime::treated_from(3, 1), Regime::never(3),
                              IndexRange{1, 3}, options),
                  input_error);
  options.n_mc = 0;
  CHECK_THROWS_AS(gcompute_mc(coeffs, 1.0, 0.0, Regime::treated_from(3, 1), Regime::never(3),
                              IndexRange{1, 2}, options),
                  input_error);
}

TEST_CASE("gcompute_mc is bit-stable across thread counts") {
  std::mt19937_64 rng(26);
  const auto coeffs = test_support::random_stable_coeffs(rng, 1.5, 0.7);
  const auto treated = Regime::treated_from(23, 12);
  const auto control = Regime::never(23);
  const IndexRange window{12, 22};
  for (bool shared : {true, false}) {
    McOptions options;
    options.n_mc = 2000;
    options.seed = 55;
    options.shared_noise = shared;
    options.threads = 1;
    const auto serial = gcompute_mc(coeffs, 40.0, 20.0, treated, control, window, options);
    options.threads = 7;
    const auto parallel = gcompute_mc(coeffs, 40.0, 20.0, treated, control, window, options);
    CHECK(serial.point == parallel.point);
    CHECK(serial.se == parallel.se);
  }
}

TEST_CASE("naive mean difference") {
  CHECK(naive_mean_difference({1.0, 1.0, 3.0, 3.0}, 2) == 2.0);
  CHECK(naive_mean_difference({2.0, 2.0, 2.0}, 1) == 0.0);
  CHECK_THROWS_AS(naive_mean_difference({1.0, 2.0}, 0), input_error);
  CHECK_THROWS_AS(naive_mean_difference({1.0, 2.0}, 2), input_error);
}

TEST_CASE("ucate analytic on the mini-case scenario") {
  timeline::AdditionScenario scenario;
  scenario.baseline = {};
  scenario.target = "drug_x";
  scenario.pre = IndexRange{0, 0};
  scenario.post = IndexRange{1, 2};
  scenario.total_points = 3;

  EstimateSettings settings;
  settings.method = EffectMethod::analytic;
  settings.n_boot = 0;
  const auto estimate = estimator::ucate(mini_coeffs(), 10.0, 0.0, scenario, settings);
  CHECK(estimate.point == -2.5);
  CHECK(estimate.window == IndexRange{1, 2});
  CHECK(estimate.regime_treated == std::vector<int>{0, 1, 1});
  CHECK(estimate.regime_control == std::vector<int>{0, 0, 0});
  CHECK_FALSE(estimate.ci_lo.has_value());
  CHECK_FALSE(estimate.naive_difference.has_value());
  CHECK_FALSE(estimate.subject_context.empty());
}

TEST_CASE("bootstrap collapses as the residual noise vanishes") {
  // Nearly noise-free coefficients: every replicate reproduces essentially
  // the same dataset, so the percentile interval closes onto the point.
  synth::GeneratorSpec spec;
  spec.beta << 5.0, -8.0, 2.0, 0.4, 0.05, 0.1;
  spec.alpha << 10.0, 0.5, -0.3, -0.6;
  spec.sigma_b = 1e-6;
  spec.sigma_l = 1e-6;
  spec.timepoints = 23;
  spec.regime = estimator::Regime::treated_from(23, 12);
  spec.b1 = 50.0;
  spec.l1 = 20.0;
  spec.seed = 3;
  const auto coeffs = synth::true_coefficients(spec);
  const auto traj = sem::simulate_forward(coeffs, spec.b1, spec.l1, spec.regime.a, spec.seed);
  const auto observed = test_support::series_from_trajectory(traj);

  const auto treated = Regime::treated_from(23, 12);
  const auto control = Regime::never(23);
  const IndexRange window{12, 22};
  const double analytic = analytic_effect(coeffs, treated, control, window, spec.b1, spec.l1);

  BootstrapOptions options;
  options.n_boot = 200;
  options.seed = 8;
  const auto ci = bootstrap_ci(coeffs, observed, treated, control, window, options);
  CHECK(ci.discarded == 0);
  CHECK(ci.hi - ci.lo <= 1e-3);
  CHECK(std::abs(ci.lo - analytic) <= 1e-3);
  CHECK(std::abs(ci.hi - analytic) <= 1e-3);
}

TEST_CASE("bootstrap with exactly zero noise is reported unstable") {
  // Zero residual variance makes every refit rank-deficient (the simulated
  // lesion series is an exact identity among the biomarker regressors), so
  // every replicate is discarded and the bootstrap refuses.
  const auto coeffs = mini_coeffs();
  timeline::SeriesView observed;
  const auto traj =
      sem::simulate_forward(coeffs, 10.0, 0.0, Regime::treated_from(10, 5).a);
  observed.b = traj.b;
  observed.l = traj.l;
  observed.a = traj.a;
  BootstrapOptions options;
  options.n_boot = 50;
  options.seed = 4;
  CHECK_THROWS_AS(bootstrap_ci(coeffs, observed, Regime::treated_from(10, 5),
                               Regime::never(10), IndexRange{5, 9}, options),
                  estimation_error);
}

TEST_CASE("bootstrap is bit-stable across thread counts") {
  synth::GeneratorSpec spec;
  spec.beta << 2.0, -3.0, 1.0, 0.5, 0.05, 0.1;
  spec.alpha << 8.0, 0.5, -0.2, -0.4;
  spec.sigma_b = 2.0;
  spec.sigma_l = 1.0;
  spec.timepoints = 23;
  spec.regime = estimator::Regime::treated_from(23, 12);
  spec.b1 = 40.0;
  spec.l1 = 16.0;
  spec.seed = 5;
  const auto tl = synth::generate_dataset(spec);
  const auto observed = timeline::extract_series(tl, spec.drug);
  const auto coeffs = sem::fit_sem(observed);
  const auto treated = Regime::treated_from(23, 12);
  const auto control = Regime::never(23);
  const IndexRange window{12, 22};

  BootstrapOptions options;
  options.n_boot = 400;
  options.seed = 66;
  options.threads = 1;
  const auto serial = bootstrap_ci(coeffs, observed, treated, control, window, options);
  options.threads = 5;
  const auto parallel = bootstrap_ci(coeffs, observed, treated, control, window, options);
  CHECK(serial.lo == parallel.lo);
  CHECK(serial.hi == parallel.hi);
  CHECK(serial.discarded == parallel.discarded);
}

TEST_CASE("spec-shaped bootstrap overload fits internally") {
  synth::GeneratorSpec spec;
  spec.beta << 2.0, -3.0, 1.0, 0.5, 0.05, 0.1;
  spec.alpha << 8.0, 0.5, -0.2, -0.4;
  spec.sigma_b = 2.0;
  spec.sigma_l = 1.0;
  spec.timepoints = 23;
  spec.regime = estimator::Regime::treated_from(23, 12);
  spec.b1 = 40.0;
  spec.l1 = 16.0;
  spec.seed = 6;
  const auto tl = synth::generate_dataset(spec);
  BootstrapOptions options;
  options.n_boot = 200;
  options.seed = 10;
  const auto ci = bootstrap_ci(tl, spec.drug, options);
  CHECK(ci.lo <= ci.hi);
  CHECK(ci.used == 200);
}

TEST_CASE("estimate_effect assembles the full estimate") {
  synth::GeneratorSpec spec;
  spec.beta << 5.0, -8.0, 2.0, 0.4, 0.05, 0.1;
  spec.alpha << 10.0, 0.5, -0.3, -0.6;
  spec.sigma_b = 4.0;
  spec.sigma_l = 1.5;
  spec.timepoints = 23;
  spec.regime = estimator::Regime::treated_from(23, 12);
  spec.b1 = 50.0;
  spec.l1 = 20.0;
  spec.seed = 12;
  const auto tl = synth::generate_dataset(spec);
  const auto observed = timeline::extract_series(tl, spec.drug);
  const auto coeffs = sem::fit_sem(observed);

  EstimateSettings settings;
  settings.method = EffectMethod::mc;
  settings.n_mc = 500;
  settings.n_boot = 400;
  settings.seed = 2024;
  const auto estimate = estimate_effect(coeffs, observed, 12, settings);
  REQUIRE(estimate.ci_lo.has_value());
  REQUIRE(estimate.ci_hi.has_value());
  CHECK(*estimate.ci_lo <= *estimate.ci_hi);
  CHECK(estimate.n_mc == 500);
  CHECK(estimate.n_boot == 400);
  CHECK(estimate.window == IndexRange{12, 22});
  REQUIRE(estimate.naive_difference.has_value());

  // analytic method with swapped-policy window
  EstimateSettings full = settings;
  full.method = EffectMethod::analytic;
  full.window_policy = WindowPolicy::full;
  const auto analytic = estimate_effect(coeffs, observed, 12, full);
  CHECK(analytic.window == IndexRange{0, 22});
  CHECK(analytic.n_mc == 0);
}

}  // TEST_SUITE

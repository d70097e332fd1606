#include "ucate/sem.hpp"

#include <cmath>
#include <sstream>

#include "ucate/rng.hpp"

namespace ucate::sem {

const std::array<const char*, kBetaTerms> kBiomarkerColumns = {
    "intercept", "a_t", "a_lag", "b_lag", "l_lag", "l_t"};
const std::array<const char*, kAlphaTerms> kLesionColumns = {
    "intercept", "l_lag", "a_lag", "a_t"};

namespace {

void require_binary(const std::vector<int>& a) {
  for (int v : a) {
    if (v != 0 && v != 1) throw input_error("exposure values must be 0 or 1");
  }
}

void require_finite(const std::vector<double>& xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw input_error(std::string("non-finite ") + what + " value");
  }
}

}  // namespace

OlsFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const std::vector<std::string>& column_names) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  if (y.size() != n) throw input_error("design and response row counts differ");
  if (n <= p) {
    std::ostringstream msg;
    msg << "too few observations for fit: n=" << n << ", p=" << p;
    throw estimation_error(msg.str());
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  const auto& sv = svd.singularValues();
  if (sv(p - 1) < kRankTolerance * sv(0)) {
    // Name the dependent columns via a pivoted QR.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    const auto rdiag = qr.matrixQR().diagonal().cwiseAbs().eval();
    const double r0 = rdiag(0);
    int rank = 0;
    for (int i = 0; i < p; ++i) {
      if (rdiag(i) > kRankTolerance * r0) ++rank;
    }
    const auto perm = qr.colsPermutation().indices();
    std::vector<std::string> offending;
    for (int i = rank; i < p; ++i) {
      offending.push_back(column_names.at(static_cast<std::size_t>(perm(i))));
    }
    std::ostringstream msg;
    msg << "rank-deficient design: dependent column(s) {";
    for (std::size_t i = 0; i < offending.size(); ++i) {
      if (i > 0) msg << ", ";
      msg << offending[i];
    }
    msg << "} (sv_min/sv_max = " << sv(p - 1) / sv(0) << ")";
    throw rank_error(msg.str());
  }

  OlsFit fit;
  fit.n = n;
  fit.p = p;
  fit.coef = x.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd residuals = y - x * fit.coef;
  fit.sigma2 = residuals.squaredNorm() / static_cast<double>(n - p);
  const Eigen::MatrixXd xtx = x.transpose() * x;
  Eigen::MatrixXd xtx_inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  xtx_inv = 0.5 * (xtx_inv + xtx_inv.transpose()).eval();
  fit.cov = fit.sigma2 * xtx_inv;
  return fit;
}

DesignMatrices build_designs(const timeline::SeriesView& series) {
  const std::size_t t_points = series.size();
  if (series.l.size() != t_points || series.a.size() != t_points) {
    throw input_error("series arrays must share one length");
  }
  if (t_points < 2) throw input_error("series needs at least 2 timepoints");
  require_binary(series.a);
  require_finite(series.b, "biomarker");
  require_finite(series.l, "lesion");

  const int n = static_cast<int>(t_points) - 1;
  DesignMatrices d;
  d.x_biomarker.resize(n, kBetaTerms);
  d.y_biomarker.resize(n);
  d.x_lesion.resize(n, kAlphaTerms);
  d.y_lesion.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::size_t t = static_cast<std::size_t>(i) + 1;
    d.x_biomarker(i, 0) = 1.0;
    d.x_biomarker(i, 1) = series.a[t];
    d.x_biomarker(i, 2) = series.a[t - 1];
    d.x_biomarker(i, 3) = series.b[t - 1];
    d.x_biomarker(i, 4) = series.l[t - 1];
    d.x_biomarker(i, 5) = series.l[t];
    d.y_biomarker(i) = series.b[t];

    d.x_lesion(i, 0) = 1.0;
    d.x_lesion(i, 1) = series.l[t - 1];
    d.x_lesion(i, 2) = series.a[t - 1];
    d.x_lesion(i, 3) = series.a[t];
    d.y_lesion(i) = series.l[t];
  }
  return d;
}

SemCoefficients fit_sem(const timeline::SeriesView& series) {
  const std::size_t t_points = series.size();
  if (t_points < 8) {
    std::ostringstream msg;
    msg << "too few timepoints for fit: T=" << t_points << " (need >= 8)";
    throw estimation_error(msg.str());
  }
  const auto designs = build_designs(series);

  const std::vector<std::string> b_names(kBiomarkerColumns.begin(), kBiomarkerColumns.end());
  const std::vector<std::string> l_names(kLesionColumns.begin(), kLesionColumns.end());
  const OlsFit biomarker = ols_fit(designs.x_biomarker, designs.y_biomarker, b_names);
  const OlsFit lesion = ols_fit(designs.x_lesion, designs.y_lesion, l_names);

  SemCoefficients coeffs;
  coeffs.beta = biomarker.coef;
  coeffs.alpha = lesion.coef;
  coeffs.sigma2_b = biomarker.sigma2;
  coeffs.sigma2_l = lesion.sigma2;
  coeffs.cov_beta = biomarker.cov;
  coeffs.cov_alpha = lesion.cov;
  coeffs.n_obs = biomarker.n;
  return coeffs;
}

SemCoefficients fit_sem(const timeline::AlignedTimeline& scenario_rows,
                        const std::string& target) {
  return fit_sem(timeline::extract_series(scenario_rows, target));
}

Trajectory simulate_with_noise(const SemCoefficients& coeffs, double b1, double l1,
                               const std::vector<int>& a,
                               const std::vector<double>& eps_l,
                               const std::vector<double>& eps_b) {
  const std::size_t t_points = a.size();
  if (t_points < 2) throw input_error("trajectory needs at least 2 timepoints");
  require_binary(a);
  if (eps_l.size() != t_points - 1 || eps_b.size() != t_points - 1) {
    throw input_error("noise arrays must have length T-1");
  }
  if (!std::isfinite(b1) || !std::isfinite(l1)) {
    throw input_error("non-finite initial value");
  }

  Trajectory traj;
  traj.b.resize(t_points);
  traj.l.resize(t_points);
  traj.a = a;
  traj.b[0] = b1;
  traj.l[0] = l1;
  const auto& beta = coeffs.beta;
  const auto& alpha = coeffs.alpha;
  for (std::size_t t = 1; t < t_points; ++t) {
    // L_t first: B_t depends on the current lesion value.
    traj.l[t] = alpha(0) + alpha(1) * traj.l[t - 1] + alpha(2) * a[t - 1] +
                alpha(3) * a[t] + eps_l[t - 1];
    traj.b[t] = beta(0) + beta(1) * a[t] + beta(2) * a[t - 1] + beta(3) * traj.b[t - 1] +
                beta(4) * traj.l[t - 1] + beta(5) * traj.l[t] + eps_b[t - 1];
    if (!std::isfinite(traj.b[t]) || !std::isfinite(traj.l[t])) {
      throw estimation_error("simulation diverged at index " + std::to_string(t));
    }
  }
  return traj;
}

Trajectory simulate_forward(const SemCoefficients& coeffs, double b1, double l1,
                            const std::vector<int>& a,
                            std::optional<std::uint64_t> noise_seed) {
  const std::size_t t_points = a.size();
  if (t_points < 2) throw input_error("trajectory needs at least 2 timepoints");
  std::vector<double> eps_l(t_points - 1, 0.0);
  std::vector<double> eps_b(t_points - 1, 0.0);
  if (noise_seed) {
    if (coeffs.sigma2_b < 0.0 || coeffs.sigma2_l < 0.0) {
      throw input_error("negative residual variance");
    }
    const double sigma_l = std::sqrt(coeffs.sigma2_l);
    const double sigma_b = std::sqrt(coeffs.sigma2_b);
    GaussianStream stream(*noise_seed);
    for (std::size_t t = 0; t + 1 < t_points; ++t) {
      eps_l[t] = sigma_l * stream.unit();
      eps_b[t] = sigma_b * stream.unit();
    }
  }
  return simulate_with_noise(coeffs, b1, l1, a, eps_l, eps_b);
}

ValidationReport validate_fit(const SemCoefficients& coeffs, const Trajectory& observed) {
  const std::size_t t_points = observed.size();
  if (observed.l.size() != t_points || observed.a.size() != t_points) {
    throw input_error("observed trajectory arrays must share one length");
  }
  if (t_points < 2) throw input_error("observed trajectory needs at least 2 timepoints");

  ValidationReport report;
  report.simulated =
      simulate_forward(coeffs, observed.b[0], observed.l[0], observed.a, std::nullopt);
  double sse_b = 0.0;
  double sse_l = 0.0;
  for (std::size_t t = 0; t < t_points; ++t) {
    const double db = report.simulated.b[t] - observed.b[t];
    const double dl = report.simulated.l[t] - observed.l[t];
    sse_b += db * db;
    sse_l += dl * dl;
  }
  report.mse_biomarker = sse_b / static_cast<double>(t_points);
  report.mse_lesion = sse_l / static_cast<double>(t_points);
  return report;
}

}  // namespace ucate::sem

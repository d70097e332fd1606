#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ucate/common.hpp"
#include "ucate/timeline.hpp"

namespace ucate::sem {

inline constexpr int kBetaTerms = 6;
inline constexpr int kAlphaTerms = 4;
inline constexpr double kRankTolerance = 1e-10;  // sv_min < tol * sv_max is an error

extern const std::array<const char*, kBetaTerms> kBiomarkerColumns;
extern const std::array<const char*, kAlphaTerms> kLesionColumns;

// Fitted two-equation linear system:
//   B_t = beta  . [1, A_t, A_{t-1}, B_{t-1}, L_{t-1}, L_t] + eps_B
//   L_t = alpha . [1, L_{t-1}, A_{t-1}, A_t]               + eps_L
struct SemCoefficients {
  Eigen::Matrix<double, kBetaTerms, 1> beta = Eigen::Matrix<double, kBetaTerms, 1>::Zero();
  Eigen::Matrix<double, kAlphaTerms, 1> alpha = Eigen::Matrix<double, kAlphaTerms, 1>::Zero();
  double sigma2_b = 0.0;
  double sigma2_l = 0.0;
  Eigen::Matrix<double, kBetaTerms, kBetaTerms> cov_beta =
      Eigen::Matrix<double, kBetaTerms, kBetaTerms>::Zero();
  Eigen::Matrix<double, kAlphaTerms, kAlphaTerms> cov_alpha =
      Eigen::Matrix<double, kAlphaTerms, kAlphaTerms>::Zero();
  int n_obs = 0;
};

struct Trajectory {
  std::vector<double> b;
  std::vector<double> l;
  std::vector<int> a;

  std::size_t size() const { return b.size(); }
};

struct OlsFit {
  Eigen::VectorXd coef;
  double sigma2 = 0.0;
  Eigen::MatrixXd cov;
  int n = 0;
  int p = 0;
};

// Plain OLS with the rank guard: throws rank_error naming the dependent
// columns when sv_min < kRankTolerance * sv_max. sigma2 uses n - p.
OlsFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const std::vector<std::string>& column_names);

struct DesignMatrices {
  Eigen::MatrixXd x_biomarker;  // (T-1) x 6
  Eigen::VectorXd y_biomarker;
  Eigen::MatrixXd x_lesion;  // (T-1) x 4
  Eigen::VectorXd y_lesion;
};

// Lagged designs over rows 2..T (0-based 1..T-1).
DesignMatrices build_designs(const timeline::SeriesView& series);

SemCoefficients fit_sem(const timeline::SeriesView& series);
SemCoefficients fit_sem(const timeline::AlignedTimeline& scenario_rows,
                        const std::string& target);

// Forward recursion from (b1, l1) under exposure vector a. Within each step
// L_t is computed before B_t. Absent noise_seed the recursion is noiseless;
// otherwise eps_L ~ N(0, sigma2_l) then eps_B ~ N(0, sigma2_b) per step.
Trajectory simulate_forward(const SemCoefficients& coeffs, double b1, double l1,
                            const std::vector<int>& a,
                            std::optional<std::uint64_t> noise_seed = std::nullopt);

// Same recursion with caller-provided disturbances for steps 1..T-1.
Trajectory simulate_with_noise(const SemCoefficients& coeffs, double b1, double l1,
                               const std::vector<int>& a,
                               const std::vector<double>& eps_l,
                               const std::vector<double>& eps_b);

struct ValidationReport {
  double mse_biomarker = 0.0;
  double mse_lesion = 0.0;
  Trajectory simulated;
};

// Noiseless simulation from the observed initial values, driven by the
// observed exposures; per-series mean squared error against the observation.
ValidationReport validate_fit(const SemCoefficients& coeffs, const Trajectory& observed);

}  // namespace ucate::sem

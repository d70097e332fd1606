#pragma once

#include <cstdint>
#include <string>

#include "ucate/estimator.hpp"
#include "ucate/sem.hpp"
#include "ucate/timeline.hpp"

namespace ucate::synth {

// Known-truth generator for synthetic single-subject datasets. Serves as the
// oracle for the statistical tests: datasets come out in the same shapes the
// ingest pipeline produces, and the exact effect of any regime contrast is
// computable from the true coefficients.
struct GeneratorSpec {
  Eigen::Matrix<double, sem::kBetaTerms, 1> beta =
      Eigen::Matrix<double, sem::kBetaTerms, 1>::Zero();
  Eigen::Matrix<double, sem::kAlphaTerms, 1> alpha =
      Eigen::Matrix<double, sem::kAlphaTerms, 1>::Zero();
  double sigma_b = 0.0;  // noise standard deviations, >= 0
  double sigma_l = 0.0;
  int timepoints = 2;
  estimator::Regime regime;  // data-generating exposure pattern, length = timepoints
  double b1 = 0.0;
  double l1 = 0.0;
  std::uint64_t seed = 0;
  std::string drug = "drug_x";
  std::string marker = "CA15-3";
  int day_spacing = 21;
};

sem::SemCoefficients true_coefficients(const GeneratorSpec& spec);

// Evenly spaced synthetic dataset with a single drug; lesion rows all flagged
// observed. Warns (into meta) when |beta3| >= 1 or |alpha1| >= 1, since the
// recursion is explosive there.
timeline::AlignedTimeline generate_dataset(const GeneratorSpec& spec);

// Exact window-mean effect of treated vs control under the true coefficients.
double true_effect(const GeneratorSpec& spec, const estimator::Regime& treated,
                   const estimator::Regime& control, const IndexRange& window);

}  // namespace ucate::synth

#include "ucate/synth.hpp"

#include <cmath>

namespace ucate::synth {

namespace {

void validate(const GeneratorSpec& spec) {
  if (spec.timepoints < 2) throw input_error("generator needs timepoints >= 2");
  if (spec.sigma_b < 0.0 || spec.sigma_l < 0.0) {
    throw input_error("noise standard deviations must be >= 0");
  }
  if (spec.regime.size() != static_cast<std::size_t>(spec.timepoints)) {
    throw input_error("regime length must equal timepoints");
  }
  if (spec.day_spacing < 1) throw input_error("day spacing must be >= 1");
  if (spec.drug.empty()) throw input_error("generator drug name must be non-empty");
  if (spec.marker.empty()) throw input_error("generator marker name must be non-empty");
}

}  // namespace

sem::SemCoefficients true_coefficients(const GeneratorSpec& spec) {
  sem::SemCoefficients coeffs;
  coeffs.beta = spec.beta;
  coeffs.alpha = spec.alpha;
  coeffs.sigma2_b = spec.sigma_b * spec.sigma_b;
  coeffs.sigma2_l = spec.sigma_l * spec.sigma_l;
  return coeffs;
}

timeline::AlignedTimeline generate_dataset(const GeneratorSpec& spec) {
  validate(spec);
  const auto coeffs = true_coefficients(spec);
  const auto traj =
      sem::simulate_forward(coeffs, spec.b1, spec.l1, spec.regime.a, spec.seed);

  timeline::AlignedTimeline tl;
  tl.meta.roster = {spec.drug};
  tl.meta.disease_directed = {spec.drug};
  tl.meta.marker = spec.marker;
  if (std::abs(spec.beta(3)) >= 1.0 || std::abs(spec.alpha(1)) >= 1.0) {
    tl.meta.warnings.push_back(
        "explosive recursion: |beta3| or |alpha1| >= 1, trajectories are unbounded");
  }

  tl.rows.reserve(static_cast<std::size_t>(spec.timepoints));
  for (std::size_t t = 0; t < traj.size(); ++t) {
    timeline::TimelineRow row;
    row.day = static_cast<int>(t) * spec.day_spacing;
    row.biomarker = traj.b[t];
    row.lesion_total = traj.l[t];
    row.lesion_provenance = timeline::LesionProvenance::observed;
    row.exposures[spec.drug] = traj.a[t];
    if (traj.a[t] == 1) row.combination.push_back(spec.drug);
    tl.rows.push_back(std::move(row));
  }
  return tl;
}

double true_effect(const GeneratorSpec& spec, const estimator::Regime& treated,
                   const estimator::Regime& control, const IndexRange& window) {
  if (treated.size() != static_cast<std::size_t>(spec.timepoints) ||
      control.size() != static_cast<std::size_t>(spec.timepoints)) {
    throw input_error("regimes must have the generator's length");
  }
  return estimator::analytic_effect(true_coefficients(spec), treated, control, window,
                                    spec.b1, spec.l1);
}

}  // namespace ucate::synth

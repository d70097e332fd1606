#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ucate/estimator.hpp"
#include "ucate/sem.hpp"
#include "ucate/synth.hpp"
#include "ucate/timeline.hpp"

namespace ucate::io {

// Analysis configuration. Defaults materialize on load; unknown keys are
// rejected. The digest is FNV-1a over the canonical (sorted-key, compact)
// form of the parsed document, so formatting and key order do not matter.
struct RunConfig {
  std::string treatments;
  std::string biomarkers;
  std::string lesions;
  std::string marker = "CA15-3";
  std::vector<std::string> disease_directed;
  std::vector<std::string> excluded;
  std::string target;
  int min_run = 3;
  timeline::LesionAggregation lesion_aggregation = timeline::LesionAggregation::sum;
  estimator::WindowPolicy contrast_window = estimator::WindowPolicy::post_only;
  estimator::EffectMethod method = estimator::EffectMethod::mc;
  estimator::TreatedRegimePolicy treated_regime = estimator::TreatedRegimePolicy::from_switch;
  bool shared_noise = true;
  int n_mc = 500;
  int n_boot = 1000;
  double ci_level = 0.95;
  std::optional<std::uint64_t> seed;

  std::string digest;
};

RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

std::string fnv1a_digest(const std::string& text);
std::string canonical_digest(const nlohmann::json& doc);
nlohmann::json parse_json_file(const std::string& path);

// --- CSV schemas ------------------------------------------------------------

// treatments: drug,day,dose,dose_unit (dose/dose_unit may be empty)
std::vector<timeline::AdministrationEvent> read_treatments_csv(const std::string& path);
void write_treatments_csv(const std::string& path,
                          const std::vector<timeline::AdministrationEvent>& events);

// biomarkers: day,<marker_1>,<marker_2>,... (empty cell = missing)
timeline::BiomarkerTable read_biomarkers_csv(const std::string& path);
void write_biomarkers_csv(const std::string& path, const timeline::BiomarkerTable& table);

// lesions: day,location,value (long format)
std::map<int, std::map<std::string, double>> read_lesions_csv(const std::string& path);
void write_lesions_csv(const std::string& path,
                       const std::map<int, std::map<std::string, double>>& lesions);

// --- JSON artifacts ---------------------------------------------------------

nlohmann::json timeline_to_json(const timeline::AlignedTimeline& tl);
timeline::AlignedTimeline timeline_from_json(const nlohmann::json& doc);

nlohmann::json segments_to_json(const std::vector<timeline::Segment>& segments,
                                std::size_t min_run);
std::vector<timeline::Segment> segments_from_json(const nlohmann::json& doc);

struct FitArtifact {
  sem::SemCoefficients coefficients;
  timeline::AdditionScenario scenario;
  std::vector<std::string> warnings;
};

nlohmann::json fit_to_json(const FitArtifact& fit);
FitArtifact fit_from_json(const nlohmann::json& doc);

nlohmann::json scenario_to_json(const timeline::AdditionScenario& scenario);
timeline::AdditionScenario scenario_from_json(const nlohmann::json& doc);

nlohmann::json validation_to_json(const sem::ValidationReport& report,
                                  const sem::Trajectory& observed,
                                  const std::vector<int>& days);

nlohmann::json effect_to_json(const estimator::EffectEstimate& estimate,
                              const std::string& window_policy);

synth::GeneratorSpec generator_spec_from_json(const nlohmann::json& doc);

estimator::Regime regime_from_json(const nlohmann::json& doc, std::size_t t_points);
nlohmann::json regime_to_json(const estimator::Regime& regime);

// Tidy plot data for a validation report: series,day,value with the lesion
// series scaled by lesion_scale for display (the JSON report is unscaled).
void write_validation_plot_csv(const std::string& path, const sem::ValidationReport& report,
                               const sem::Trajectory& observed, const std::vector<int>& days,
                               double lesion_scale);

// Tidy trajectory rows: regime,replicate,day,b,l ("mean" replicates).
void write_trajectories_csv(const std::string& path, const sem::Trajectory& treated,
                            const sem::Trajectory& control, const std::vector<int>& days);

// Serialization used by every artifact writer: 2-space indent, sorted keys,
// trailing newline. Byte-stable for identical inputs.
std::string dump_artifact(const nlohmann::json& doc);

}  // namespace ucate::io

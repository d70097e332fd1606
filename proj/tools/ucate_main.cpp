#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ucate/estimator.hpp"
#include "ucate/io.hpp"
#include "ucate/sem.hpp"
#include "ucate/synth.hpp"
#include "ucate/timeline.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ucate;

void emit(const json& doc, const std::string& out_path) {
  const std::string text = io::dump_artifact(doc);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + out_path + "'");
  out << text;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           const std::optional<std::uint64_t>& config_seed) {
  if (flag_seed) return *flag_seed;
  if (config_seed) return *config_seed;
  throw input_error("missing seed: pass --seed or set 'seed' in the config");
}

timeline::AlignedTimeline load_timeline(const std::string& path) {
  return io::timeline_from_json(io::parse_json_file(path));
}

struct LoadedFit {
  io::FitArtifact artifact;
  std::string config_digest;  // propagated from the producing command, if any
};

LoadedFit load_fit(const std::string& path) {
  const auto doc = io::parse_json_file(path);
  LoadedFit fit;
  fit.artifact = io::fit_from_json(doc);
  if (doc.contains("config_digest") && doc.at("config_digest").is_string()) {
    fit.config_digest = doc.at("config_digest").get<std::string>();
  }
  return fit;
}

timeline::SeriesView scenario_series(const timeline::AlignedTimeline& tl,
                                     const timeline::AdditionScenario& scenario) {
  const IndexRange window{scenario.pre.first, scenario.post.last};
  const auto restricted = timeline::restrict(tl, window);
  auto series = timeline::extract_series(restricted, scenario.target);
  const std::size_t switch_offset = scenario.switch_offset();
  for (std::size_t t = 0; t < series.size(); ++t) {
    const int expected = t >= switch_offset ? 1 : 0;
    if (series.a[t] != expected) {
      throw input_error("fit scenario inconsistent with timeline: target '" +
                        scenario.target + "' exposure mismatch at scenario index " +
                        std::to_string(t));
    }
  }
  return series;
}

int cmd_ingest(const std::string& config_path, const std::string& out_path) {
  const auto cfg = io::load_config(config_path);
  timeline::TimelineInputs inputs;
  inputs.events = io::read_treatments_csv(cfg.treatments);
  inputs.biomarkers = io::read_biomarkers_csv(cfg.biomarkers);
  inputs.lesions = io::read_lesions_csv(cfg.lesions);

  timeline::TimelineOptions options;
  options.marker = cfg.marker;
  options.disease_directed = cfg.disease_directed;
  options.excluded = cfg.excluded;
  options.lesion_aggregation = cfg.lesion_aggregation;

  const auto tl = timeline::build_timeline(inputs, options);
  print_warnings(tl.meta.warnings);

  auto doc = io::timeline_to_json(tl);
  doc["config_digest"] = cfg.digest;
  doc["seed"] = nullptr;
  emit(doc, out_path);
  return 0;
}

int cmd_segment(const std::string& config_path, const std::string& timeline_path,
                const std::string& out_path) {
  const auto cfg = io::load_config(config_path);
  const auto tl = load_timeline(timeline_path);
  std::vector<timeline::Combination> labels;
  labels.reserve(tl.rows.size());
  for (const auto& row : tl.rows) labels.push_back(row.combination);
  const auto segments = timeline::segment_runs(labels, static_cast<std::size_t>(cfg.min_run));

  auto doc = io::segments_to_json(segments, static_cast<std::size_t>(cfg.min_run));
  doc["config_digest"] = cfg.digest;
  doc["seed"] = nullptr;
  emit(doc, out_path);
  return 0;
}

int cmd_fit(const std::string& config_path, const std::string& timeline_path,
            const std::string& out_path) {
  const auto cfg = io::load_config(config_path);
  const auto tl = load_timeline(timeline_path);
  std::vector<timeline::Combination> labels;
  labels.reserve(tl.rows.size());
  for (const auto& row : tl.rows) labels.push_back(row.combination);
  const auto segments = timeline::segment_runs(labels, static_cast<std::size_t>(cfg.min_run));
  const auto scenario = timeline::extract_addition_scenario(segments, tl, cfg.target);
  const auto series = scenario_series(tl, scenario);

  io::FitArtifact fit;
  fit.coefficients = sem::fit_sem(series);
  fit.scenario = scenario;

  auto doc = io::fit_to_json(fit);
  doc["config_digest"] = cfg.digest;
  doc["seed"] = nullptr;
  emit(doc, out_path);
  return 0;
}

int cmd_validate(const std::string& fit_path, const std::string& timeline_path,
                 const std::string& out_path, const std::string& plot_path,
                 double lesion_scale) {
  const auto fit = load_fit(fit_path);
  const auto tl = load_timeline(timeline_path);
  const auto series = scenario_series(tl, fit.artifact.scenario);

  sem::Trajectory observed;
  observed.b = series.b;
  observed.l = series.l;
  observed.a = series.a;
  const auto report = sem::validate_fit(fit.artifact.coefficients, observed);

  auto doc = io::validation_to_json(report, observed, series.days);
  doc["config_digest"] = fit.config_digest.empty() ? json(nullptr) : json(fit.config_digest);
  doc["seed"] = nullptr;
  if (!plot_path.empty()) {
    io::write_validation_plot_csv(plot_path, report, observed, series.days, lesion_scale);
  }
  emit(doc, out_path);
  return 0;
}

int cmd_estimate(const std::string& config_path, const std::string& fit_path,
                 const std::string& timeline_path, const std::string& out_path,
                 const std::optional<std::uint64_t>& flag_seed, int threads,
                 const std::string& trajectories_path) {
  const auto cfg = io::load_config(config_path);
  const auto fit = load_fit(fit_path);
  const auto tl = load_timeline(timeline_path);
  if (fit.artifact.scenario.target != cfg.target) {
    throw input_error("fit scenario target '" + fit.artifact.scenario.target +
                      "' does not match config target '" + cfg.target + "'");
  }
  const auto series = scenario_series(tl, fit.artifact.scenario);

  estimator::EstimateSettings settings;
  settings.method = cfg.method;
  settings.window_policy = cfg.contrast_window;
  settings.treated_policy = cfg.treated_regime;
  settings.n_mc = cfg.n_mc;
  settings.n_boot = cfg.n_boot;
  settings.ci_level = cfg.ci_level;
  settings.seed = resolve_seed(flag_seed, cfg.seed);
  settings.shared_noise = cfg.shared_noise;
  settings.threads = threads;

  const auto estimate = estimator::estimate_effect(
      fit.artifact.coefficients, series, fit.artifact.scenario.switch_offset(), settings);
  print_warnings(estimate.warnings);

  if (!trajectories_path.empty()) {
    estimator::Regime treated = estimator::Regime::custom(estimate.regime_treated, "treated");
    estimator::Regime control = estimator::Regime::custom(estimate.regime_control, "control");
    sem::Trajectory traj_treated;
    sem::Trajectory traj_control;
    if (settings.method == estimator::EffectMethod::analytic) {
      traj_treated = estimator::analytic_counterfactual_means(
          fit.artifact.coefficients, treated, series.b.front(), series.l.front());
      traj_control = estimator::analytic_counterfactual_means(
          fit.artifact.coefficients, control, series.b.front(), series.l.front());
    } else {
      estimator::McOptions mc;
      mc.n_mc = settings.n_mc;
      mc.seed = settings.seed;
      mc.shared_noise = settings.shared_noise;
      mc.threads = settings.threads;
      const auto means = estimator::mc_mean_trajectories(
          fit.artifact.coefficients, series.b.front(), series.l.front(), treated, control, mc);
      traj_treated = means.treated_mean;
      traj_control = means.control_mean;
    }
    io::write_trajectories_csv(trajectories_path, traj_treated, traj_control, series.days);
  }

  const char* policy =
      cfg.contrast_window == estimator::WindowPolicy::post_only ? "post_only" : "full";
  auto doc = io::effect_to_json(estimate, policy);
  doc["config_digest"] = cfg.digest;
  emit(doc, out_path);
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              const std::optional<std::uint64_t>& flag_seed, const std::string& out_path) {
  const auto spec_doc = io::parse_json_file(spec_path);
  auto spec = io::generator_spec_from_json(spec_doc);
  std::optional<std::uint64_t> spec_seed;
  if (spec_doc.contains("seed")) spec_seed = spec.seed;
  spec.seed = resolve_seed(flag_seed, spec_seed);

  const auto tl = synth::generate_dataset(spec);
  print_warnings(tl.meta.warnings);

  fs::create_directories(out_dir);
  const auto treatments_path = (fs::path(out_dir) / "treatments.csv").string();
  const auto biomarkers_path = (fs::path(out_dir) / "biomarkers.csv").string();
  const auto lesions_path = (fs::path(out_dir) / "lesions.csv").string();

  std::vector<timeline::AdministrationEvent> events;
  for (const auto& row : tl.rows) {
    if (row.exposures.at(spec.drug) == 1) {
      events.push_back(timeline::AdministrationEvent{spec.drug, row.day, std::nullopt});
    }
  }
  io::write_treatments_csv(treatments_path, events);

  timeline::BiomarkerTable table;
  table.markers = {spec.marker};
  for (const auto& row : tl.rows) {
    table.days.push_back(row.day);
    table.values.push_back({row.biomarker});
  }
  io::write_biomarkers_csv(biomarkers_path, table);

  std::map<int, std::map<std::string, double>> lesions;
  for (const auto& row : tl.rows) lesions[row.day]["total"] = row.lesion_total;
  io::write_lesions_csv(lesions_path, lesions);

  json doc{{"files",
            json{{"treatments", treatments_path},
                 {"biomarkers", biomarkers_path},
                 {"lesions", lesions_path}}},
           {"timepoints", tl.rows.size()},
           {"warnings", tl.meta.warnings},
           {"config_digest", io::canonical_digest(spec_doc)},
           {"seed", spec.seed}};
  emit(doc, out_path);
  return 0;
}

estimator::Regime parse_regime_dsl(const std::string& text, std::size_t t_points,
                                   const synth::GeneratorSpec& spec) {
  if (text == "spec") return spec.regime;
  if (text == "never") return estimator::Regime::never(t_points);
  if (text == "always") return estimator::Regime::always(t_points);
  if (text.rfind("from:", 0) == 0) {
    const auto s = std::stoul(text.substr(5));
    return estimator::Regime::treated_from(t_points, s);
  }
  if (text.find(',') != std::string::npos) {
    std::vector<int> a;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto comma = text.find(',', pos);
      const auto token = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                     : comma - pos);
      if (token != "0" && token != "1") {
        throw input_error("regime '" + text + "': entries must be 0 or 1");
      }
      a.push_back(token == "1" ? 1 : 0);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (a.size() != t_points) {
      throw input_error("regime '" + text + "': expected " + std::to_string(t_points) +
                        " entries");
    }
    return estimator::Regime::custom(std::move(a), "custom");
  }
  throw input_error("regime '" + text + "': expected spec|never|always|from:<index>|0,1,...");
}

IndexRange parse_window_dsl(const std::string& text, const estimator::Regime& treated,
                            const estimator::Regime& control) {
  const std::size_t t_points = treated.size();
  if (text == "full") return IndexRange{0, t_points - 1};
  if (text == "diff") {
    std::size_t first = t_points;
    std::size_t last = 0;
    for (std::size_t t = 0; t < t_points; ++t) {
      if (treated.a[t] != control.a[t]) {
        first = std::min(first, t);
        last = std::max(last, t);
      }
    }
    if (first == t_points) return IndexRange{0, t_points - 1};  // identical regimes
    return IndexRange{first, last};
  }
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto first = std::stoul(text.substr(0, dots));
    const auto last = std::stoul(text.substr(dots + 2));
    return IndexRange{first, last};
  }
  throw input_error("window '" + text + "': expected diff|full|<first>..<last>");
}

int cmd_oracle(const std::string& spec_path, const std::string& treated_dsl,
               const std::string& control_dsl, const std::string& window_dsl,
               const std::string& out_path) {
  const auto spec_doc = io::parse_json_file(spec_path);
  const auto spec = io::generator_spec_from_json(spec_doc);
  const auto t_points = static_cast<std::size_t>(spec.timepoints);
  const auto treated = parse_regime_dsl(treated_dsl, t_points, spec);
  const auto control = parse_regime_dsl(control_dsl, t_points, spec);
  const auto window = parse_window_dsl(window_dsl, treated, control);
  const double effect = synth::true_effect(spec, treated, control, window);

  json doc{{"true_effect", effect},
           {"window", json{{"start_index", window.first}, {"end_index", window.last}}},
           {"regime_treated", treated.a},
           {"regime_control", control.a},
           {"config_digest", io::canonical_digest(spec_doc)},
           {"seed", nullptr}};
  emit(doc, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-subject treatment-effect estimation from longitudinal data"};
  app.require_subcommand(1);

  std::string config_path;
  std::string timeline_path;
  std::string fit_path;
  std::string spec_path;
  std::string out_path;
  std::string out_dir;
  std::string plot_path;
  std::string trajectories_path;
  std::string treated_dsl = "spec";
  std::string control_dsl = "never";
  std::string window_dsl = "diff";
  double lesion_scale = 10.0;
  int threads = 1;
  std::optional<std::uint64_t> seed;

  auto* ingest = app.add_subcommand("ingest", "align treatments, biomarkers, and lesions");
  ingest->add_option("--config", config_path, "config JSON")->required();
  ingest->add_option("--out", out_path, "output path (default stdout)");

  auto* segment = app.add_subcommand("segment", "maximal constant-combination runs");
  segment->add_option("--config", config_path, "config JSON")->required();
  segment->add_option("--timeline", timeline_path, "timeline JSON from ingest")->required();
  segment->add_option("--out", out_path, "output path (default stdout)");

  auto* fit = app.add_subcommand("fit", "fit the two-equation linear model");
  fit->add_option("--config", config_path, "config JSON")->required();
  fit->add_option("--timeline", timeline_path, "timeline JSON from ingest")->required();
  fit->add_option("--out", out_path, "output path (default stdout)");

  auto* validate = app.add_subcommand("validate", "forward-simulate and score the fit");
  validate->add_option("--fit", fit_path, "fit JSON")->required();
  validate->add_option("--timeline", timeline_path, "timeline JSON from ingest")->required();
  validate->add_option("--emit-plot-data", plot_path, "tidy series/day/value CSV");
  validate->add_option("--scale-lesion", lesion_scale,
                       "display factor for lesion series in the plot CSV");
  validate->add_option("--out", out_path, "output path (default stdout)");

  auto* estimate = app.add_subcommand("estimate", "counterfactual contrast with bootstrap CI");
  estimate->add_option("--config", config_path, "config JSON")->required();
  estimate->add_option("--fit", fit_path, "fit JSON")->required();
  estimate->add_option("--timeline", timeline_path, "timeline JSON from ingest")->required();
  estimate->add_option("--seed", seed, "random seed (overrides config)");
  estimate->add_option("--threads", threads, "worker threads for replicates");
  estimate->add_option("--emit-trajectories", trajectories_path,
                       "tidy regime/replicate/day/b/l CSV");
  estimate->add_option("--out", out_path, "output path (default stdout)");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--spec", spec_path, "generator spec JSON")->required();
  synth_cmd->add_option("--seed", seed, "random seed (overrides spec)");
  synth_cmd->add_option("--out-dir", out_dir, "directory for the CSV files")->required();
  synth_cmd->add_option("--out", out_path, "manifest path (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "exact effect under the true coefficients");
  oracle->add_option("--spec", spec_path, "generator spec JSON")->required();
  oracle->add_option("--treated", treated_dsl, "spec|never|always|from:<i>|0,1,...");
  oracle->add_option("--control", control_dsl, "spec|never|always|from:<i>|0,1,...");
  oracle->add_option("--window", window_dsl, "diff|full|<first>..<last>");
  oracle->add_option("--out", out_path, "output path (default stdout)");

  ingest->callback([&] { cmd_ingest(config_path, out_path); });
  segment->callback([&] { cmd_segment(config_path, timeline_path, out_path); });
  fit->callback([&] { cmd_fit(config_path, timeline_path, out_path); });
  validate->callback(
      [&] { cmd_validate(fit_path, timeline_path, out_path, plot_path, lesion_scale); });
  estimate->callback([&] {
    cmd_estimate(config_path, fit_path, timeline_path, out_path, seed, threads,
                 trajectories_path);
  });
  synth_cmd->callback([&] { cmd_synth(spec_path, out_dir, seed, out_path); });
  oracle->callback(
      [&] { cmd_oracle(spec_path, treated_dsl, control_dsl, window_dsl, out_path); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const estimation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

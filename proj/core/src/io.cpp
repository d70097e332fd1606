#include "ucate/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ucate/csv.hpp"

namespace ucate::io {

using nlohmann::json;

namespace {

std::string where(const std::string& path, std::size_t line, const std::string& column) {
  std::ostringstream msg;
  msg << path << ":" << line << ": column '" << column << "': ";
  return msg.str();
}

int parse_int(const std::string& text, const std::string& path, std::size_t line,
              const std::string& column) {
  try {
    std::size_t pos = 0;
    const int value = std::stoi(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw input_error(where(path, line, column) + "expected an integer, got '" + text + "'");
  }
}

double parse_double(const std::string& text, const std::string& path, std::size_t line,
                    const std::string& column) {
  try {
    std::size_t pos = 0;
    const double value = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    if (!std::isfinite(value)) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw input_error(where(path, line, column) + "expected a finite number, got '" + text +
                      "'");
  }
}

std::size_t require_column(const CsvTable& table, const std::string& path,
                           const std::string& name) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    throw input_error(path + ":1: missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - table.header.begin());
}

void require_exact_header(const CsvTable& table, const std::string& path,
                          const std::vector<std::string>& expected) {
  for (const auto& name : expected) require_column(table, path, name);
  for (const auto& name : table.header) {
    if (std::find(expected.begin(), expected.end(), name) == expected.end()) {
      throw input_error(path + ":1: unexpected column '" + name + "'");
    }
  }
}

// Shortest round-trip decimal form, matching the JSON artifacts.
std::string number_field(double x) { return json(x).dump(); }

void require_keys(const json& doc, const std::vector<std::string>& known,
                  const std::string& context) {
  if (!doc.is_object()) throw input_error(context + ": expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw input_error(context + ": unknown key '" + key + "'");
    }
  }
}

const json& require_field(const json& doc, const std::string& key,
                          const std::string& context) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw input_error(context + ": missing key '" + key + "'");
  return *it;
}

std::vector<std::string> string_array(const json& value, const std::string& context) {
  if (!value.is_array()) throw input_error(context + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& item : value) {
    if (!item.is_string()) throw input_error(context + ": expected an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<double> number_array(const json& value, std::size_t expected,
                                 const std::string& context) {
  if (!value.is_array() || (expected > 0 && value.size() != expected)) {
    std::ostringstream msg;
    msg << context << ": expected an array of " << expected << " number(s)";
    throw input_error(msg.str());
  }
  std::vector<double> out;
  for (const auto& item : value) {
    if (!item.is_number()) throw input_error(context + ": expected numbers");
    out.push_back(item.get<double>());
  }
  return out;
}

IndexRange range_from_json(const json& doc, const std::string& context) {
  require_keys(doc, {"start_index", "end_index"}, context);
  IndexRange r;
  r.first = require_field(doc, "start_index", context).get<std::size_t>();
  r.last = require_field(doc, "end_index", context).get<std::size_t>();
  if (r.first > r.last) throw input_error(context + ": start_index > end_index");
  return r;
}

json range_to_json(const IndexRange& r) {
  return json{{"start_index", r.first}, {"end_index", r.last}};
}

}  // namespace

std::string fnv1a_digest(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[hash & 0xf];
    hash >>= 4;
  }
  return out;
}

std::string canonical_digest(const json& doc) { return fnv1a_digest(doc.dump()); }

json parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

std::string dump_artifact(const json& doc) { return doc.dump(2) + "\n"; }

// --- config -----------------------------------------------------------------

RunConfig config_from_json(const json& doc) {
  static const std::vector<std::string> known = {
      "treatments",   "biomarkers",      "lesions",         "marker",
      "disease_directed", "excluded",    "target",          "min_run",
      "lesion_aggregation", "contrast_window", "method",    "treated_regime",
      "shared_noise", "n_mc",            "n_boot",          "ci_level",
      "seed"};
  require_keys(doc, known, "config");

  RunConfig cfg;
  cfg.treatments = require_field(doc, "treatments", "config").get<std::string>();
  cfg.biomarkers = require_field(doc, "biomarkers", "config").get<std::string>();
  cfg.lesions = require_field(doc, "lesions", "config").get<std::string>();
  cfg.target = require_field(doc, "target", "config").get<std::string>();
  cfg.disease_directed =
      string_array(require_field(doc, "disease_directed", "config"), "config.disease_directed");

  if (doc.contains("marker")) cfg.marker = doc.at("marker").get<std::string>();
  if (doc.contains("excluded")) {
    cfg.excluded = string_array(doc.at("excluded"), "config.excluded");
  }
  if (doc.contains("min_run")) cfg.min_run = doc.at("min_run").get<int>();
  if (cfg.min_run < 1) throw input_error("config: min_run must be >= 1");

  if (doc.contains("lesion_aggregation")) {
    const auto mode = doc.at("lesion_aggregation").get<std::string>();
    if (mode == "sum") cfg.lesion_aggregation = timeline::LesionAggregation::sum;
    else if (mode == "mean") cfg.lesion_aggregation = timeline::LesionAggregation::mean;
    else throw input_error("config: lesion_aggregation must be 'sum' or 'mean'");
  }
  if (doc.contains("contrast_window")) {
    const auto policy = doc.at("contrast_window").get<std::string>();
    if (policy == "post_only") cfg.contrast_window = estimator::WindowPolicy::post_only;
    else if (policy == "full") cfg.contrast_window = estimator::WindowPolicy::full;
    else throw input_error("config: contrast_window must be 'post_only' or 'full'");
  }
  if (doc.contains("method")) {
    const auto method = doc.at("method").get<std::string>();
    if (method == "mc") cfg.method = estimator::EffectMethod::mc;
    else if (method == "analytic") cfg.method = estimator::EffectMethod::analytic;
    else throw input_error("config: method must be 'mc' or 'analytic'");
  }
  if (doc.contains("treated_regime")) {
    const auto policy = doc.at("treated_regime").get<std::string>();
    if (policy == "from_switch") cfg.treated_regime = estimator::TreatedRegimePolicy::from_switch;
    else if (policy == "always_one") cfg.treated_regime = estimator::TreatedRegimePolicy::always_one;
    else throw input_error("config: treated_regime must be 'from_switch' or 'always_one'");
  }
  if (doc.contains("shared_noise")) cfg.shared_noise = doc.at("shared_noise").get<bool>();
  if (doc.contains("n_mc")) cfg.n_mc = doc.at("n_mc").get<int>();
  if (cfg.n_mc < 1) throw input_error("config: n_mc must be >= 1");
  if (doc.contains("n_boot")) cfg.n_boot = doc.at("n_boot").get<int>();
  if (cfg.n_boot < 0) throw input_error("config: n_boot must be >= 0");
  if (doc.contains("ci_level")) cfg.ci_level = doc.at("ci_level").get<double>();
  if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) {
    throw input_error("config: ci_level must be in (0, 1)");
  }
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();

  if (std::find(cfg.disease_directed.begin(), cfg.disease_directed.end(), cfg.target) ==
      cfg.disease_directed.end()) {
    throw input_error("config: target '" + cfg.target + "' must be disease-directed");
  }
  cfg.digest = canonical_digest(doc);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  return config_from_json(parse_json_file(path));
}

// --- CSV schemas ------------------------------------------------------------

std::vector<timeline::AdministrationEvent> read_treatments_csv(const std::string& path) {
  const auto table = read_csv(path);
  require_exact_header(table, path, {"drug", "day", "dose", "dose_unit"});
  const auto c_drug = require_column(table, path, "drug");
  const auto c_day = require_column(table, path, "day");
  const auto c_dose = require_column(table, path, "dose");
  const auto c_unit = require_column(table, path, "dose_unit");

  std::vector<timeline::AdministrationEvent> events;
  events.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    timeline::AdministrationEvent ev;
    ev.drug = row[c_drug];
    if (ev.drug.empty()) throw input_error(where(path, line, "drug") + "must be non-empty");
    ev.day = parse_int(row[c_day], path, line, "day");
    if (ev.day < 0) throw input_error(where(path, line, "day") + "must be >= 0");
    if (!row[c_dose].empty()) {
      timeline::Dose dose;
      dose.amount = parse_double(row[c_dose], path, line, "dose");
      if (dose.amount <= 0.0) throw input_error(where(path, line, "dose") + "must be > 0");
      dose.unit = row[c_unit];
      ev.dose = dose;
    } else if (!row[c_unit].empty()) {
      throw input_error(where(path, line, "dose_unit") + "present without a dose");
    }
    events.push_back(std::move(ev));
  }
  return events;
}

void write_treatments_csv(const std::string& path,
                          const std::vector<timeline::AdministrationEvent>& events) {
  CsvTable table;
  table.header = {"drug", "day", "dose", "dose_unit"};
  for (const auto& ev : events) {
    std::vector<std::string> row(4);
    row[0] = ev.drug;
    row[1] = std::to_string(ev.day);
    if (ev.dose) {
      row[2] = number_field(ev.dose->amount);
      row[3] = ev.dose->unit;
    }
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

timeline::BiomarkerTable read_biomarkers_csv(const std::string& path) {
  const auto table = read_csv(path);
  if (table.header.empty() || table.header[0] != "day") {
    throw input_error(path + ":1: missing column 'day'");
  }
  if (table.header.size() < 2) {
    throw input_error(path + ":1: expected at least one marker column after 'day'");
  }

  timeline::BiomarkerTable out;
  out.markers.assign(table.header.begin() + 1, table.header.end());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    const int day = parse_int(row[0], path, line, "day");
    if (!out.days.empty() && day <= out.days.back()) {
      throw input_error(where(path, line, "day") + "days must be strictly increasing");
    }
    out.days.push_back(day);
    std::vector<std::optional<double>> cells;
    cells.reserve(out.markers.size());
    for (std::size_t m = 0; m < out.markers.size(); ++m) {
      const auto& cell = row[m + 1];
      if (cell.empty()) {
        cells.push_back(std::nullopt);
      } else {
        cells.push_back(parse_double(cell, path, line, out.markers[m]));
      }
    }
    out.values.push_back(std::move(cells));
  }
  return out;
}

void write_biomarkers_csv(const std::string& path, const timeline::BiomarkerTable& table) {
  CsvTable out;
  out.header.push_back("day");
  for (const auto& marker : table.markers) out.header.push_back(marker);
  for (std::size_t r = 0; r < table.days.size(); ++r) {
    std::vector<std::string> row;
    row.push_back(std::to_string(table.days[r]));
    for (const auto& cell : table.values[r]) {
      row.push_back(cell ? number_field(*cell) : std::string());
    }
    out.rows.push_back(std::move(row));
  }
  write_csv(path, out);
}

std::map<int, std::map<std::string, double>> read_lesions_csv(const std::string& path) {
  const auto table = read_csv(path);
  require_exact_header(table, path, {"day", "location", "value"});
  const auto c_day = require_column(table, path, "day");
  const auto c_location = require_column(table, path, "location");
  const auto c_value = require_column(table, path, "value");

  std::map<int, std::map<std::string, double>> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    const int day = parse_int(row[c_day], path, line, "day");
    if (day < 0) throw input_error(where(path, line, "day") + "must be >= 0");
    const auto& location = row[c_location];
    if (location.empty()) {
      throw input_error(where(path, line, "location") + "must be non-empty");
    }
    const double value = parse_double(row[c_value], path, line, "value");
    if (value < 0.0) throw input_error(where(path, line, "value") + "must be >= 0");
    auto [it, inserted] = out[day].emplace(location, value);
    (void)it;
    if (!inserted) {
      throw input_error(where(path, line, "location") + "duplicate entry for day " +
                        std::to_string(day) + ", location '" + location + "'");
    }
  }
  return out;
}

void write_lesions_csv(const std::string& path,
                       const std::map<int, std::map<std::string, double>>& lesions) {
  CsvTable table;
  table.header = {"day", "location", "value"};
  for (const auto& [day, per_location] : lesions) {
    for (const auto& [location, value] : per_location) {
      table.rows.push_back({std::to_string(day), location, number_field(value)});
    }
  }
  write_csv(path, table);
}

// --- timeline JSON ----------------------------------------------------------

json timeline_to_json(const timeline::AlignedTimeline& tl) {
  json rows = json::array();
  for (const auto& row : tl.rows) {
    json exposures = json::object();
    for (const auto& [drug, indicator] : row.exposures) exposures[drug] = indicator;
    rows.push_back(json{{"day", row.day},
                        {"biomarker", row.biomarker},
                        {"lesion_total", row.lesion_total},
                        {"lesion_provenance", timeline::to_string(row.lesion_provenance)},
                        {"exposures", std::move(exposures)},
                        {"combination", row.combination}});
  }
  return json{{"meta",
               json{{"roster", tl.meta.roster},
                    {"disease_directed", tl.meta.disease_directed},
                    {"marker", tl.meta.marker},
                    {"warnings", tl.meta.warnings}}},
              {"rows", std::move(rows)}};
}

timeline::AlignedTimeline timeline_from_json(const json& doc) {
  timeline::AlignedTimeline tl;
  const auto& meta = require_field(doc, "meta", "timeline");
  tl.meta.roster = string_array(require_field(meta, "roster", "timeline.meta"), "roster");
  tl.meta.disease_directed =
      string_array(require_field(meta, "disease_directed", "timeline.meta"),
                   "disease_directed");
  tl.meta.marker = require_field(meta, "marker", "timeline.meta").get<std::string>();
  tl.meta.warnings =
      string_array(require_field(meta, "warnings", "timeline.meta"), "warnings");

  const auto& rows = require_field(doc, "rows", "timeline");
  if (!rows.is_array()) throw input_error("timeline: 'rows' must be an array");
  int last_day = -1;
  bool first = true;
  for (const auto& row : rows) {
    timeline::TimelineRow out;
    out.day = require_field(row, "day", "timeline.row").get<int>();
    if (!first && out.day <= last_day) {
      throw input_error("timeline: row days must be strictly increasing");
    }
    first = false;
    last_day = out.day;
    out.biomarker = require_field(row, "biomarker", "timeline.row").get<double>();
    out.lesion_total = require_field(row, "lesion_total", "timeline.row").get<double>();
    out.lesion_provenance = timeline::lesion_provenance_from_string(
        require_field(row, "lesion_provenance", "timeline.row").get<std::string>());
    const auto& exposures = require_field(row, "exposures", "timeline.row");
    for (const auto& [drug, indicator] : exposures.items()) {
      const int v = indicator.get<int>();
      if (v != 0 && v != 1) throw input_error("timeline: exposure values must be 0 or 1");
      out.exposures[drug] = v;
    }
    out.combination =
        string_array(require_field(row, "combination", "timeline.row"), "combination");
    tl.rows.push_back(std::move(out));
  }
  return tl;
}

// --- segments JSON ----------------------------------------------------------

json segments_to_json(const std::vector<timeline::Segment>& segments, std::size_t min_run) {
  json items = json::array();
  for (const auto& seg : segments) {
    items.push_back(json{{"start_index", seg.start_index},
                         {"end_index", seg.end_index},
                         {"length", seg.length()},
                         {"combination", seg.combination}});
  }
  return json{{"min_run", min_run}, {"segments", std::move(items)}};
}

std::vector<timeline::Segment> segments_from_json(const json& doc) {
  std::vector<timeline::Segment> out;
  for (const auto& item : require_field(doc, "segments", "segments")) {
    timeline::Segment seg;
    seg.start_index = require_field(item, "start_index", "segment").get<std::size_t>();
    seg.end_index = require_field(item, "end_index", "segment").get<std::size_t>();
    seg.combination =
        string_array(require_field(item, "combination", "segment"), "combination");
    out.push_back(std::move(seg));
  }
  return out;
}

// --- scenario / fit JSON ----------------------------------------------------

json scenario_to_json(const timeline::AdditionScenario& scenario) {
  return json{{"baseline", scenario.baseline},
              {"target", scenario.target},
              {"pre", range_to_json(scenario.pre)},
              {"post", range_to_json(scenario.post)},
              {"timepoints", scenario.total_points},
              {"switch_offset", scenario.switch_offset()}};
}

timeline::AdditionScenario scenario_from_json(const json& doc) {
  timeline::AdditionScenario scenario;
  scenario.baseline = string_array(require_field(doc, "baseline", "scenario"), "baseline");
  scenario.target = require_field(doc, "target", "scenario").get<std::string>();
  scenario.pre = range_from_json(require_field(doc, "pre", "scenario"), "scenario.pre");
  scenario.post = range_from_json(require_field(doc, "post", "scenario"), "scenario.post");
  scenario.total_points = scenario.pre.size() + scenario.post.size();
  if (scenario.post.first != scenario.pre.last + 1) {
    throw input_error("scenario: post must start right after pre");
  }
  const auto declared = require_field(doc, "timepoints", "scenario").get<std::size_t>();
  if (declared != scenario.total_points) {
    throw input_error("scenario: timepoints does not match pre+post");
  }
  return scenario;
}

json fit_to_json(const FitArtifact& fit) {
  const auto& c = fit.coefficients;
  std::vector<double> beta(c.beta.data(), c.beta.data() + sem::kBetaTerms);
  std::vector<double> alpha(c.alpha.data(), c.alpha.data() + sem::kAlphaTerms);
  std::vector<double> cov_beta;
  cov_beta.reserve(sem::kBetaTerms * sem::kBetaTerms);
  for (int r = 0; r < sem::kBetaTerms; ++r) {
    for (int k = 0; k < sem::kBetaTerms; ++k) cov_beta.push_back(c.cov_beta(r, k));
  }
  std::vector<double> cov_alpha;
  cov_alpha.reserve(sem::kAlphaTerms * sem::kAlphaTerms);
  for (int r = 0; r < sem::kAlphaTerms; ++r) {
    for (int k = 0; k < sem::kAlphaTerms; ++k) cov_alpha.push_back(c.cov_alpha(r, k));
  }
  return json{{"beta", beta},
              {"alpha", alpha},
              {"sigma2_b", c.sigma2_b},
              {"sigma2_l", c.sigma2_l},
              {"cov_beta", cov_beta},
              {"cov_alpha", cov_alpha},
              {"n_obs", c.n_obs},
              {"scenario", scenario_to_json(fit.scenario)},
              {"warnings", fit.warnings}};
}

FitArtifact fit_from_json(const json& doc) {
  FitArtifact fit;
  const auto beta = number_array(require_field(doc, "beta", "fit"), sem::kBetaTerms, "fit.beta");
  const auto alpha =
      number_array(require_field(doc, "alpha", "fit"), sem::kAlphaTerms, "fit.alpha");
  for (int i = 0; i < sem::kBetaTerms; ++i) {
    fit.coefficients.beta(i) = beta[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < sem::kAlphaTerms; ++i) {
    fit.coefficients.alpha(i) = alpha[static_cast<std::size_t>(i)];
  }
  fit.coefficients.sigma2_b = require_field(doc, "sigma2_b", "fit").get<double>();
  fit.coefficients.sigma2_l = require_field(doc, "sigma2_l", "fit").get<double>();
  if (fit.coefficients.sigma2_b < 0.0 || fit.coefficients.sigma2_l < 0.0) {
    throw input_error("fit: residual variances must be >= 0");
  }
  const auto cov_beta = number_array(require_field(doc, "cov_beta", "fit"),
                                     sem::kBetaTerms * sem::kBetaTerms, "fit.cov_beta");
  const auto cov_alpha = number_array(require_field(doc, "cov_alpha", "fit"),
                                      sem::kAlphaTerms * sem::kAlphaTerms, "fit.cov_alpha");
  for (int r = 0; r < sem::kBetaTerms; ++r) {
    for (int k = 0; k < sem::kBetaTerms; ++k) {
      fit.coefficients.cov_beta(r, k) =
          cov_beta[static_cast<std::size_t>(r * sem::kBetaTerms + k)];
    }
  }
  for (int r = 0; r < sem::kAlphaTerms; ++r) {
    for (int k = 0; k < sem::kAlphaTerms; ++k) {
      fit.coefficients.cov_alpha(r, k) =
          cov_alpha[static_cast<std::size_t>(r * sem::kAlphaTerms + k)];
    }
  }
  fit.coefficients.n_obs = require_field(doc, "n_obs", "fit").get<int>();
  fit.scenario = scenario_from_json(require_field(doc, "scenario", "fit"));
  if (doc.contains("warnings")) fit.warnings = string_array(doc.at("warnings"), "fit.warnings");
  return fit;
}

// --- validation / effect JSON -----------------------------------------------

json validation_to_json(const sem::ValidationReport& report, const sem::Trajectory& observed,
                        const std::vector<int>& days) {
  return json{{"mse_biomarker", report.mse_biomarker},
              {"mse_lesion", report.mse_lesion},
              {"days", days},
              {"observed",
               json{{"biomarker", observed.b},
                    {"lesion", observed.l},
                    {"exposure", observed.a}}},
              {"simulated",
               json{{"biomarker", report.simulated.b}, {"lesion", report.simulated.l}}}};
}

json effect_to_json(const estimator::EffectEstimate& estimate,
                    const std::string& window_policy) {
  json window = range_to_json(estimate.window);
  window["policy"] = window_policy;
  return json{
      {"point", estimate.point},
      {"ci_level", estimate.ci_level},
      {"ci_lo", estimate.ci_lo ? json(*estimate.ci_lo) : json(nullptr)},
      {"ci_hi", estimate.ci_hi ? json(*estimate.ci_hi) : json(nullptr)},
      {"window", std::move(window)},
      {"n_mc", estimate.n_mc},
      {"n_boot", estimate.n_boot},
      {"seed", estimate.seed},
      {"method", estimate.method == estimator::EffectMethod::mc ? "mc" : "analytic"},
      {"naive_difference",
       estimate.naive_difference ? json(*estimate.naive_difference) : json(nullptr)},
      {"subject_context", estimate.subject_context},
      {"regime_treated", estimate.regime_treated},
      {"regime_control", estimate.regime_control},
      {"bootstrap_discarded", estimate.bootstrap_discarded},
      {"warnings", estimate.warnings}};
}

// --- generator spec ---------------------------------------------------------

estimator::Regime regime_from_json(const json& doc, std::size_t t_points) {
  require_keys(doc, {"type", "switch_index", "a", "label"}, "regime");
  const auto type = require_field(doc, "type", "regime").get<std::string>();
  if (type == "never") return estimator::Regime::never(t_points);
  if (type == "always") return estimator::Regime::always(t_points);
  if (type == "treated_from") {
    const auto s = require_field(doc, "switch_index", "regime").get<std::size_t>();
    return estimator::Regime::treated_from(t_points, s);
  }
  if (type == "custom") {
    const auto& arr = require_field(doc, "a", "regime");
    std::vector<int> a;
    for (const auto& v : arr) a.push_back(v.get<int>());
    if (a.size() != t_points) throw input_error("regime: custom vector length mismatch");
    std::string label = doc.contains("label") ? doc.at("label").get<std::string>() : "custom";
    return estimator::Regime::custom(std::move(a), std::move(label));
  }
  throw input_error("regime: type must be never|always|treated_from|custom");
}

json regime_to_json(const estimator::Regime& regime) {
  json out{{"label", regime.label}, {"a", regime.a}};
  if (regime.switch_index) out["switch_index"] = *regime.switch_index;
  return out;
}

synth::GeneratorSpec generator_spec_from_json(const json& doc) {
  static const std::vector<std::string> known = {
      "beta", "alpha", "sigma_b", "sigma_l", "timepoints", "regime",
      "b1",   "l1",    "seed",    "drug",    "marker",     "day_spacing"};
  require_keys(doc, known, "generator spec");

  synth::GeneratorSpec spec;
  const auto beta =
      number_array(require_field(doc, "beta", "generator spec"), sem::kBetaTerms, "beta");
  const auto alpha =
      number_array(require_field(doc, "alpha", "generator spec"), sem::kAlphaTerms, "alpha");
  for (int i = 0; i < sem::kBetaTerms; ++i) spec.beta(i) = beta[static_cast<std::size_t>(i)];
  for (int i = 0; i < sem::kAlphaTerms; ++i) {
    spec.alpha(i) = alpha[static_cast<std::size_t>(i)];
  }
  spec.sigma_b = require_field(doc, "sigma_b", "generator spec").get<double>();
  spec.sigma_l = require_field(doc, "sigma_l", "generator spec").get<double>();
  spec.timepoints = require_field(doc, "timepoints", "generator spec").get<int>();
  if (spec.timepoints < 2) throw input_error("generator spec: timepoints must be >= 2");
  spec.regime = regime_from_json(require_field(doc, "regime", "generator spec"),
                                 static_cast<std::size_t>(spec.timepoints));
  spec.b1 = require_field(doc, "b1", "generator spec").get<double>();
  spec.l1 = require_field(doc, "l1", "generator spec").get<double>();
  if (doc.contains("seed")) spec.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("drug")) spec.drug = doc.at("drug").get<std::string>();
  if (doc.contains("marker")) spec.marker = doc.at("marker").get<std::string>();
  if (doc.contains("day_spacing")) spec.day_spacing = doc.at("day_spacing").get<int>();
  return spec;
}

// --- plot / trajectory CSV --------------------------------------------------

void write_validation_plot_csv(const std::string& path, const sem::ValidationReport& report,
                               const sem::Trajectory& observed, const std::vector<int>& days,
                               double lesion_scale) {
  CsvTable table;
  table.header = {"series", "day", "value"};
  const auto add = [&](const char* series, double value, int day) {
    table.rows.push_back({series, std::to_string(day), number_field(value)});
  };
  for (std::size_t t = 0; t < days.size(); ++t) {
    add("observed_biomarker", observed.b[t], days[t]);
  }
  for (std::size_t t = 0; t < days.size(); ++t) {
    add("simulated_biomarker", report.simulated.b[t], days[t]);
  }
  for (std::size_t t = 0; t < days.size(); ++t) {
    add("observed_lesion", observed.l[t] * lesion_scale, days[t]);
  }
  for (std::size_t t = 0; t < days.size(); ++t) {
    add("simulated_lesion", report.simulated.l[t] * lesion_scale, days[t]);
  }
  write_csv(path, table);
}

void write_trajectories_csv(const std::string& path, const sem::Trajectory& treated,
                            const sem::Trajectory& control, const std::vector<int>& days) {
  CsvTable table;
  table.header = {"regime", "replicate", "day", "b", "l"};
  for (std::size_t t = 0; t < days.size(); ++t) {
    table.rows.push_back({"treated", "mean", std::to_string(days[t]),
                          number_field(treated.b[t]), number_field(treated.l[t])});
  }
  for (std::size_t t = 0; t < days.size(); ++t) {
    table.rows.push_back({"control", "mean", std::to_string(days[t]),
                          number_field(control.b[t]), number_field(control.l[t])});
  }
  write_csv(path, table);
}

}  // namespace ucate::io

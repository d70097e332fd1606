#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "test_support.hpp"
#include "ucate/csv.hpp"
#include "ucate/io.hpp"

using namespace ucate;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() / ("ucate_io_" + std::to_string(rng()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = (path / name).string();
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }
};

json base_config() {
  return json{{"treatments", "t.csv"},
              {"biomarkers", "b.csv"},
              {"lesions", "l.csv"},
              {"target", "X"},
              {"disease_directed", {"X"}}};
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("treatments csv round trip and validation") {
  TempDir dir;
  const auto path = dir.file("t.csv",
                             "drug,day,dose,dose_unit\n"
                             "fulvestrant,875,500,mg\n"
                             "capecitabine,12,,\n");
  const auto events = io::read_treatments_csv(path);
  REQUIRE(events.size() == 2);
  CHECK(events[0].drug == "fulvestrant");
  CHECK(events[0].day == 875);
  REQUIRE(events[0].dose.has_value());
  CHECK(events[0].dose->amount == 500.0);
  CHECK(events[0].dose->unit == "mg");
  CHECK_FALSE(events[1].dose.has_value());

  const auto out = (dir.path / "t2.csv").string();
  io::write_treatments_csv(out, events);
  const auto again = io::read_treatments_csv(out);
  CHECK(again.size() == 2);
  CHECK(again[0].dose->amount == 500.0);
}

TEST_CASE("treatments csv errors name file, line, and column") {
  TempDir dir;
  const auto missing = dir.file("m.csv", "drug,day,dose\nx,1,\n");
  try {
    io::read_treatments_csv(missing);
    FAIL("expected error");
  } catch (const input_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("dose_unit") != std::string::npos);
    CHECK(msg.find(":1") != std::string::npos);
  }

  const auto bad_day = dir.file("d.csv", "drug,day,dose,dose_unit\nx,soon,,\n");
  try {
    io::read_treatments_csv(bad_day);
    FAIL("expected error");
  } catch (const input_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("d.csv:2") != std::string::npos);
    CHECK(msg.find("'day'") != std::string::npos);
  }

  const auto unit_only = dir.file("u.csv", "drug,day,dose,dose_unit\nx,1,,mg\n");
  CHECK_THROWS_AS(io::read_treatments_csv(unit_only), input_error);
}

TEST_CASE("biomarkers csv handles missing cells and ordering") {
  TempDir dir;
  const auto path = dir.file("b.csv",
                             "day,CA15-3,CEA\n"
                             "0,31.2,1.1\n"
                             "21,,1.2\n"
                             "42,33.9,\n");
  const auto table = io::read_biomarkers_csv(path);
  CHECK(table.days == std::vector<int>{0, 21, 42});
  CHECK(table.markers == std::vector<std::string>{"CA15-3", "CEA"});
  CHECK_FALSE(table.values[1][0].has_value());
  CHECK(table.values[2][0] == 33.9);

  const auto out = (dir.path / "b2.csv").string();
  io::write_biomarkers_csv(out, table);
  const auto again = io::read_biomarkers_csv(out);
  CHECK(again.values == table.values);

  const auto unsorted = dir.file("bad.csv", "day,CA15-3\n21,1\n0,2\n");
  CHECK_THROWS_AS(io::read_biomarkers_csv(unsorted), input_error);
  const auto no_marker = dir.file("nm.csv", "day\n0\n");
  CHECK_THROWS_AS(io::read_biomarkers_csv(no_marker), input_error);
}

TEST_CASE("lesions csv rejects duplicates and negatives") {
  TempDir dir;
  const auto path = dir.file("l.csv",
                             "day,location,value\n"
                             "0,liver,30\n"
                             "0,spleen,12.5\n"
                             "90,liver,25\n");
  const auto lesions = io::read_lesions_csv(path);
  REQUIRE(lesions.size() == 2);
  CHECK(lesions.at(0).at("spleen") == 12.5);

  const auto dup = dir.file("dup.csv", "day,location,value\n0,liver,30\n0,liver,31\n");
  CHECK_THROWS_AS(io::read_lesions_csv(dup), input_error);
  const auto neg = dir.file("neg.csv", "day,location,value\n0,liver,-3\n");
  CHECK_THROWS_AS(io::read_lesions_csv(neg), input_error);
}

TEST_CASE("csv quoting survives commas and quotes") {
  TempDir dir;
  io::CsvTable table;
  table.header = {"a", "b"};
  table.rows = {{"x,y", "he said \"hi\""}};
  const auto path = (dir.path / "q.csv").string();
  io::write_csv(path, table);
  const auto again = io::read_csv(path);
  CHECK(again.rows[0][0] == "x,y");
  CHECK(again.rows[0][1] == "he said \"hi\"");
}

TEST_CASE("config materializes defaults and rejects unknown keys") {
  const auto cfg = io::config_from_json(base_config());
  CHECK(cfg.marker == "CA15-3");
  CHECK(cfg.min_run == 3);
  CHECK(cfg.n_mc == 500);
  CHECK(cfg.n_boot == 1000);
  CHECK(cfg.ci_level == 0.95);
  CHECK(cfg.method == estimator::EffectMethod::mc);
  CHECK(cfg.contrast_window == estimator::WindowPolicy::post_only);
  CHECK(cfg.shared_noise);
  CHECK_FALSE(cfg.seed.has_value());

  auto unknown = base_config();
  unknown["n_mcc"] = 5;
  CHECK_THROWS_AS(io::config_from_json(unknown), input_error);

  auto bad_target = base_config();
  bad_target["target"] = "Y";
  CHECK_THROWS_AS(io::config_from_json(bad_target), input_error);

  auto bad_level = base_config();
  bad_level["ci_level"] = 1.0;
  CHECK_THROWS_AS(io::config_from_json(bad_level), input_error);
}

TEST_CASE("config digest ignores formatting and key order") {
  auto a = base_config();
  a["n_mc"] = 250;
  json b;
  b["n_mc"] = 250;
  b["disease_directed"] = {"X"};
  b["target"] = "X";
  b["lesions"] = "l.csv";
  b["biomarkers"] = "b.csv";
  b["treatments"] = "t.csv";
  CHECK(io::config_from_json(a).digest == io::config_from_json(b).digest);

  auto c = base_config();
  c["n_mc"] = 251;
  CHECK(io::config_from_json(a).digest != io::config_from_json(c).digest);
}

TEST_CASE("fnv digest is stable") {
  CHECK(io::fnv1a_digest("") == "cbf29ce484222325");
  CHECK(io::fnv1a_digest("a") == "af63dc4c8601ec8c");
}

TEST_CASE("timeline json round trip") {
  timeline::AlignedTimeline tl;
  tl.meta.roster = {"X", "dex"};
  tl.meta.disease_directed = {"X"};
  tl.meta.marker = "CA15-3";
  tl.meta.warnings = {"something"};
  for (int t = 0; t < 3; ++t) {
    timeline::TimelineRow row;
    row.day = t * 21;
    row.biomarker = 10.0 + t;
    row.lesion_total = 50.0 - t;
    row.lesion_provenance =
        t == 0 ? timeline::LesionProvenance::observed : timeline::LesionProvenance::locf;
    row.exposures = {{"X", t > 0 ? 1 : 0}, {"dex", 0}};
    if (t > 0) row.combination = {"X"};
    tl.rows.push_back(row);
  }
  const auto doc = io::timeline_to_json(tl);
  const auto back = io::timeline_from_json(doc);
  REQUIRE(back.rows.size() == 3);
  CHECK(back.meta.roster == tl.meta.roster);
  CHECK(back.rows[1].exposures.at("X") == 1);
  CHECK(back.rows[1].lesion_provenance == timeline::LesionProvenance::locf);
  CHECK(back.rows[2].combination == timeline::Combination{"X"});
}

TEST_CASE("fit artifact json round trip") {
  std::mt19937_64 rng(2);
  io::FitArtifact fit;
  fit.coefficients = test_support::random_stable_coeffs(rng, 1.0, 0.5);
  fit.coefficients.cov_beta.setIdentity();
  fit.coefficients.cov_alpha.setConstant(0.25);
  fit.coefficients.n_obs = 22;
  fit.scenario.baseline = {"P"};
  fit.scenario.target = "F";
  fit.scenario.pre = IndexRange{4, 15};
  fit.scenario.post = IndexRange{16, 26};
  fit.scenario.total_points = 23;

  const auto doc = io::fit_to_json(fit);
  const auto back = io::fit_from_json(doc);
  CHECK(back.coefficients.beta == fit.coefficients.beta);
  CHECK(back.coefficients.alpha == fit.coefficients.alpha);
  CHECK(back.coefficients.cov_beta == fit.coefficients.cov_beta);
  CHECK(back.coefficients.n_obs == 22);
  CHECK(back.scenario.pre == fit.scenario.pre);
  CHECK(back.scenario.switch_offset() == 12);

  auto gap = doc;
  gap["scenario"]["post"]["start_index"] = 17;
  CHECK_THROWS_AS(io::fit_from_json(gap), input_error);
}

TEST_CASE("generator spec json parsing") {
  const json doc{{"beta", {0.0, -2.0, 0.0, 0.5, 0.0, 0.0}},
                 {"alpha", {0.0, 0.0, 0.0, 0.0}},
                 {"sigma_b", 0.0},
                 {"sigma_l", 0.0},
                 {"timepoints", 3},
                 {"regime", {{"type", "treated_from"}, {"switch_index", 1}}},
                 {"b1", 10.0},
                 {"l1", 0.0},
                 {"seed", 7}};
  const auto spec = io::generator_spec_from_json(doc);
  CHECK(spec.beta(1) == -2.0);
  CHECK(spec.regime.a == std::vector<int>{0, 1, 1});
  CHECK(spec.drug == "drug_x");
  CHECK(spec.day_spacing == 21);

  auto custom = doc;
  custom["regime"] = json{{"type", "custom"}, {"a", {1, 0, 1}}};
  CHECK(io::generator_spec_from_json(custom).regime.a == std::vector<int>{1, 0, 1});

  auto unknown = doc;
  unknown["extra"] = 1;
  CHECK_THROWS_AS(io::generator_spec_from_json(unknown), input_error);
  auto bad_regime = doc;
  bad_regime["regime"] = json{{"type", "sometimes"}};
  CHECK_THROWS_AS(io::generator_spec_from_json(bad_regime), input_error);
}

TEST_CASE("artifact dump is newline-terminated and key-sorted") {
  const json doc{{"zeta", 1}, {"alpha", 2}};
  const auto text = io::dump_artifact(doc);
  CHECK(text.back() == '\n');
  CHECK(text.find("alpha") < text.find("zeta"));
}

TEST_CASE("effect json carries the documented keys") {
  estimator::EffectEstimate estimate;
  estimate.point = -2.5;
  estimate.ci_lo = -3.0;
  estimate.ci_hi = -2.0;
  estimate.window = IndexRange{1, 2};
  estimate.n_mc = 500;
  estimate.n_boot = 100;
  estimate.seed = 7;
  estimate.naive_difference = -4.0;
  estimate.regime_treated = {0, 1, 1};
  estimate.regime_control = {0, 0, 0};
  const auto doc = io::effect_to_json(estimate, "post_only");
  for (const char* key : {"point", "ci_level", "ci_lo", "ci_hi", "window", "n_mc", "n_boot",
                          "seed", "method", "naive_difference", "regime_treated",
                          "regime_control", "subject_context"}) {
    CHECK(doc.contains(key));
  }
  CHECK(doc["window"]["policy"] == "post_only");
  CHECK(doc["point"] == -2.5);
}

}  // TEST_SUITE

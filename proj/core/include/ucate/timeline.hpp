#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ucate/common.hpp"

namespace ucate::timeline {

struct Dose {
  double amount = 0.0;  // > 0
  std::string unit;
};

// One drug administration at an integer study-day offset (days since start).
struct AdministrationEvent {
  std::string drug;
  int day = 0;  // >= 0
  std::optional<Dose> dose;
};

// Ordered (day, value) series; days strictly increasing, values finite.
struct MeasurementSeries {
  std::string name;
  std::vector<std::pair<int, double>> points;
};

// Wide biomarker table as ingested: one row per measurement day, one column
// per marker, empty cells = missing.
struct BiomarkerTable {
  std::vector<int> days;  // strictly increasing
  std::vector<std::string> markers;
  std::vector<std::vector<std::optional<double>>> values;  // [row][marker]
};

enum class LesionProvenance { observed, locf, backfill };

const char* to_string(LesionProvenance p);
LesionProvenance lesion_provenance_from_string(const std::string& s);

// Sorted, unique set of disease-directed drugs active at one timepoint.
using Combination = std::vector<std::string>;

struct TimelineRow {
  int day = 0;
  double biomarker = 0.0;
  double lesion_total = 0.0;
  LesionProvenance lesion_provenance = LesionProvenance::observed;
  std::map<std::string, int> exposures;  // drug -> {0,1} over the full roster
  Combination combination;
};

struct TimelineMeta {
  std::vector<std::string> roster;             // sorted
  std::vector<std::string> disease_directed;   // sorted
  std::string marker;
  std::vector<std::string> warnings;
};

// Measurement-day-indexed join of the selected biomarker, the LOCF-aligned
// lesion total, and per-drug exposure indicators.
struct AlignedTimeline {
  std::vector<TimelineRow> rows;
  TimelineMeta meta;
};

// Maximal run of a single treatment combination, inclusive row indices.
struct Segment {
  std::size_t start_index = 0;
  std::size_t end_index = 0;
  Combination combination;

  std::size_t length() const { return end_index - start_index + 1; }
};

// A window where one drug joins an otherwise constant baseline combination.
struct AdditionScenario {
  Combination baseline;
  std::string target;
  IndexRange pre;   // rows on baseline only
  IndexRange post;  // rows on baseline + target
  std::size_t total_points = 0;

  // First post index relative to the scenario window (0-based).
  std::size_t switch_offset() const { return pre.size(); }
};

struct ExposureMatrix {
  std::vector<std::string> drugs;           // sorted roster
  std::vector<std::vector<int>> indicator;  // [timepoint][drug index]
  std::vector<std::string> warnings;
};

enum class LesionAggregation { sum, mean };

struct LocfPoint {
  double value = 0.0;
  LesionProvenance provenance = LesionProvenance::observed;
};

// indicator(drug, t) = 1 iff some event for that drug falls in the half-open
// window (d_{t-1}, d_t]. The first timepoint looks back by the median
// inter-measurement gap; with a single measurement day only same-day events
// count. Events for drugs outside the roster are ignored with a warning.
ExposureMatrix align_exposures(const std::vector<AdministrationEvent>& events,
                               const std::vector<int>& measurement_days,
                               const std::vector<std::string>& roster);

// Per-row label: the sorted disease-directed drugs with indicator 1.
std::vector<Combination> derive_combinations(const AlignedTimeline& tl,
                                             const std::vector<std::string>& disease_directed);

// Maximal runs of identical labels with length >= min_run, in timeline order.
std::vector<Segment> segment_runs(const std::vector<Combination>& labels,
                                  std::size_t min_run = 3);

// Last observation carried forward onto target days; exact-day matches are
// flagged observed, days before the first observation take its value with a
// backfill flag.
std::vector<LocfPoint> locf_align(const MeasurementSeries& lesion,
                                  const std::vector<int>& target_days);

// Collapses per-location lesion values at one assessment day into a scalar.
double aggregate_lesions(const std::map<std::string, double>& per_location,
                         LesionAggregation mode = LesionAggregation::sum);

// Finds an adjacent segment pair whose combinations differ by exactly the
// target drug. Pairs differing by two or more drugs are skipped; a matching
// pair separated by rows in neither segment is a "gap between segments" error.
AdditionScenario extract_addition_scenario(const std::vector<Segment>& segments,
                                           const AlignedTimeline& tl,
                                           const std::string& target);

struct TimelineInputs {
  std::vector<AdministrationEvent> events;
  BiomarkerTable biomarkers;
  std::map<int, std::map<std::string, double>> lesions;  // day -> location -> value
};

struct TimelineOptions {
  std::string marker = "CA15-3";
  std::vector<std::string> disease_directed;
  std::vector<std::string> excluded;
  LesionAggregation lesion_aggregation = LesionAggregation::sum;
};

// Full ingest: select the marker (dropping timepoints where it is missing,
// with a warning), drop config-excluded drugs (with a warning), align
// exposures, aggregate and LOCF-align lesions, derive combinations.
AlignedTimeline build_timeline(const TimelineInputs& inputs, const TimelineOptions& options);

// Observed series over a window: biomarker, lesion total, target exposure.
struct SeriesView {
  std::vector<double> b;
  std::vector<double> l;
  std::vector<int> a;
  std::vector<int> days;

  std::size_t size() const { return b.size(); }
};

AlignedTimeline restrict(const AlignedTimeline& tl, const IndexRange& range);
SeriesView extract_series(const AlignedTimeline& tl, const std::string& target);

}  // namespace ucate::timeline

#include "ucate/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ucate::timeline {

namespace {

std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

double median_gap(const std::vector<int>& days) {
  std::vector<double> gaps;
  gaps.reserve(days.size());
  for (std::size_t i = 1; i < days.size(); ++i) {
    gaps.push_back(static_cast<double>(days[i] - days[i - 1]));
  }
  if (gaps.empty()) return 0.0;
  std::sort(gaps.begin(), gaps.end());
  const std::size_t m = gaps.size();
  if (m % 2 == 1) return gaps[m / 2];
  return 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]);
}

void require_strictly_increasing(const std::vector<int>& days, const char* what) {
  for (std::size_t i = 1; i < days.size(); ++i) {
    if (days[i] <= days[i - 1]) {
      std::ostringstream msg;
      msg << what << " must be strictly increasing (day " << days[i] << " after day "
          << days[i - 1] << ")";
      throw input_error(msg.str());
    }
  }
}

}  // namespace

const char* to_string(LesionProvenance p) {
  switch (p) {
    case LesionProvenance::observed: return "observed";
    case LesionProvenance::locf: return "locf";
    case LesionProvenance::backfill: return "backfill";
  }
  return "observed";
}

LesionProvenance lesion_provenance_from_string(const std::string& s) {
  if (s == "observed") return LesionProvenance::observed;
  if (s == "locf") return LesionProvenance::locf;
  if (s == "backfill") return LesionProvenance::backfill;
  throw input_error("unknown lesion provenance '" + s + "'");
}

ExposureMatrix align_exposures(const std::vector<AdministrationEvent>& events,
                               const std::vector<int>& measurement_days,
                               const std::vector<std::string>& roster) {
  if (measurement_days.empty()) throw input_error("no timepoints");
  require_strictly_increasing(measurement_days, "measurement days");
  if (roster.empty()) throw input_error("empty drug roster");

  ExposureMatrix out;
  out.drugs = roster;
  std::sort(out.drugs.begin(), out.drugs.end());
  out.drugs.erase(std::unique(out.drugs.begin(), out.drugs.end()), out.drugs.end());

  const std::size_t t_count = measurement_days.size();
  out.indicator.assign(t_count, std::vector<int>(out.drugs.size(), 0));

  // Per-drug sorted event days.
  std::map<std::string, std::vector<double>> event_days;
  std::set<std::string> warned;
  for (const auto& ev : events) {
    if (ev.drug.empty()) throw input_error("administration event with empty drug name");
    if (ev.day < 0) throw input_error("administration event with negative day");
    if (ev.dose && ev.dose->amount <= 0.0) {
      throw input_error("administration event for '" + ev.drug + "' with non-positive dose");
    }
    if (!std::binary_search(out.drugs.begin(), out.drugs.end(), ev.drug)) {
      if (warned.insert(ev.drug).second) {
        out.warnings.push_back("ignored events for drug '" + ev.drug + "': not in roster");
      }
      continue;
    }
    event_days[ev.drug].push_back(static_cast<double>(ev.day));
  }
  for (auto& [drug, days] : event_days) std::sort(days.begin(), days.end());

  const double gap = median_gap(measurement_days);
  for (std::size_t d = 0; d < out.drugs.size(); ++d) {
    auto it = event_days.find(out.drugs[d]);
    if (it == event_days.end()) continue;
    const auto& days = it->second;
    for (std::size_t t = 0; t < t_count; ++t) {
      const double hi = static_cast<double>(measurement_days[t]);
      double lo;
      if (t > 0) {
        lo = static_cast<double>(measurement_days[t - 1]);
      } else if (gap > 0.0) {
        lo = hi - gap;
      } else {
        // single measurement day: count same-day administrations only
        lo = hi - 0.5;
      }
      auto first = std::upper_bound(days.begin(), days.end(), lo);
      if (first != days.end() && *first <= hi) out.indicator[t][d] = 1;
    }
  }
  return out;
}

std::vector<Combination> derive_combinations(const AlignedTimeline& tl,
                                             const std::vector<std::string>& disease_directed) {
  std::vector<std::string> dd = disease_directed;
  std::sort(dd.begin(), dd.end());
  dd.erase(std::unique(dd.begin(), dd.end()), dd.end());

  for (const auto& row : tl.rows) {
    for (const auto& drug : dd) {
      if (row.exposures.find(drug) == row.exposures.end()) {
        throw input_error("disease-directed drug '" + drug + "' not in roster");
      }
    }
  }

  std::vector<Combination> labels;
  labels.reserve(tl.rows.size());
  for (const auto& row : tl.rows) {
    Combination label;
    for (const auto& drug : dd) {
      if (row.exposures.at(drug) == 1) label.push_back(drug);
    }
    labels.push_back(std::move(label));
  }
  return labels;
}

std::vector<Segment> segment_runs(const std::vector<Combination>& labels,
                                  std::size_t min_run) {
  if (min_run < 1) throw input_error("min_run must be >= 1");
  std::vector<Segment> segments;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= labels.size(); ++i) {
    if (i == labels.size() || labels[i] != labels[start]) {
      if (i - start >= min_run) {
        segments.push_back(Segment{start, i - 1, labels[start]});
      }
      start = i;
    }
  }
  return segments;
}

std::vector<LocfPoint> locf_align(const MeasurementSeries& lesion,
                                  const std::vector<int>& target_days) {
  if (lesion.points.empty()) throw input_error("no lesion data");
  for (std::size_t i = 1; i < lesion.points.size(); ++i) {
    if (lesion.points[i].first <= lesion.points[i - 1].first) {
      throw input_error("lesion series days must be strictly increasing");
    }
  }
  for (const auto& [day, value] : lesion.points) {
    if (!std::isfinite(value)) throw input_error("non-finite lesion value");
  }

  std::vector<LocfPoint> out;
  out.reserve(target_days.size());
  for (int day : target_days) {
    // last observation with day <= target
    auto it = std::upper_bound(
        lesion.points.begin(), lesion.points.end(), day,
        [](int d, const std::pair<int, double>& p) { return d < p.first; });
    if (it == lesion.points.begin()) {
      out.push_back(LocfPoint{lesion.points.front().second, LesionProvenance::backfill});
      continue;
    }
    --it;
    const auto provenance =
        (it->first == day) ? LesionProvenance::observed : LesionProvenance::locf;
    out.push_back(LocfPoint{it->second, provenance});
  }
  return out;
}

double aggregate_lesions(const std::map<std::string, double>& per_location,
                         LesionAggregation mode) {
  if (per_location.empty()) throw input_error("no lesion measurements at timepoint");
  double sum = 0.0;
  for (const auto& [location, value] : per_location) {
    if (!std::isfinite(value) || value < 0.0) {
      throw input_error("lesion value for location '" + location +
                        "' must be finite and >= 0");
    }
    sum += value;
  }
  if (mode == LesionAggregation::mean) return sum / static_cast<double>(per_location.size());
  return sum;
}

AdditionScenario extract_addition_scenario(const std::vector<Segment>& segments,
                                           const AlignedTimeline& tl,
                                           const std::string& target) {
  if (segments.size() < 2) throw input_error("need at least two segments");

  bool saw_gapped_candidate = false;
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    const Segment& s1 = segments[i];
    const Segment& s2 = segments[i + 1];
    if (s2.combination.size() != s1.combination.size() + 1) continue;
    if (!std::includes(s2.combination.begin(), s2.combination.end(),
                       s1.combination.begin(), s1.combination.end())) {
      continue;
    }
    Combination added;
    std::set_difference(s2.combination.begin(), s2.combination.end(),
                        s1.combination.begin(), s1.combination.end(),
                        std::back_inserter(added));
    if (added.size() != 1 || added.front() != target) continue;

    if (s2.start_index != s1.end_index + 1) {
      saw_gapped_candidate = true;
      continue;
    }

    AdditionScenario scenario;
    scenario.baseline = s1.combination;
    scenario.target = target;
    scenario.pre = IndexRange{s1.start_index, s1.end_index};
    scenario.post = IndexRange{s2.start_index, s2.end_index};
    scenario.total_points = scenario.pre.size() + scenario.post.size();

    // Exposure pattern sanity over the window.
    for (std::size_t r = scenario.pre.first; r <= scenario.post.last; ++r) {
      if (r >= tl.rows.size()) throw input_error("segment indices beyond timeline rows");
      const auto& row = tl.rows[r];
      const auto it = row.exposures.find(target);
      if (it == row.exposures.end()) {
        throw input_error("target drug '" + target + "' not in roster");
      }
      const int expected = scenario.post.contains(r) ? 1 : 0;
      if (it->second != expected) {
        throw input_error("inconsistent target exposure inside scenario window");
      }
    }
    return scenario;
  }
  if (saw_gapped_candidate) {
    throw estimation_error("gap between segments: addition of '" + target +
                           "' found but the segments are not adjacent");
  }
  throw estimation_error("no addition scenario for target '" + target + "'");
}

AlignedTimeline build_timeline(const TimelineInputs& inputs, const TimelineOptions& options) {
  AlignedTimeline out;
  out.meta.marker = options.marker;

  // Config-level drug exclusions, surfaced rather than silently dropped.
  std::set<std::string> excluded(options.excluded.begin(), options.excluded.end());
  std::map<std::string, int> excluded_counts;
  std::vector<AdministrationEvent> kept_events;
  kept_events.reserve(inputs.events.size());
  for (const auto& ev : inputs.events) {
    if (excluded.count(ev.drug)) {
      ++excluded_counts[ev.drug];
    } else {
      kept_events.push_back(ev);
    }
  }
  for (const auto& [drug, count] : excluded_counts) {
    out.meta.warnings.push_back("drug '" + drug + "' excluded by configuration (" +
                                std::to_string(count) + " event(s) ignored)");
  }

  std::set<std::string> roster_set;
  for (const auto& ev : kept_events) roster_set.insert(ev.drug);
  out.meta.roster.assign(roster_set.begin(), roster_set.end());

  out.meta.disease_directed = options.disease_directed;
  std::sort(out.meta.disease_directed.begin(), out.meta.disease_directed.end());
  out.meta.disease_directed.erase(
      std::unique(out.meta.disease_directed.begin(), out.meta.disease_directed.end()),
      out.meta.disease_directed.end());
  for (const auto& drug : out.meta.disease_directed) {
    if (!roster_set.count(drug)) {
      throw input_error("disease-directed drug '" + drug + "' not in roster (roster: " +
                        join(out.meta.roster) + ")");
    }
  }

  // Selected marker column; timepoints without it are dropped with a warning.
  const auto& table = inputs.biomarkers;
  require_strictly_increasing(table.days, "biomarker days");
  auto marker_it = std::find(table.markers.begin(), table.markers.end(), options.marker);
  if (marker_it == table.markers.end()) {
    throw input_error("marker '" + options.marker + "' not found (available: " +
                      join(table.markers) + ")");
  }
  const std::size_t marker_col =
      static_cast<std::size_t>(marker_it - table.markers.begin());

  std::vector<int> days;
  std::vector<double> marker_values;
  for (std::size_t r = 0; r < table.days.size(); ++r) {
    const auto& cell = table.values.at(r).at(marker_col);
    if (!cell.has_value()) {
      out.meta.warnings.push_back("dropped timepoint day=" + std::to_string(table.days[r]) +
                                  ": missing value for marker '" + options.marker + "'");
      continue;
    }
    if (!std::isfinite(*cell)) {
      throw input_error("non-finite biomarker value at day " + std::to_string(table.days[r]));
    }
    days.push_back(table.days[r]);
    marker_values.push_back(*cell);
  }
  if (days.empty()) throw input_error("no timepoints");

  ExposureMatrix exposures;
  if (!out.meta.roster.empty()) {
    exposures = align_exposures(kept_events, days, out.meta.roster);
    for (const auto& w : exposures.warnings) out.meta.warnings.push_back(w);
  }

  // Lesion totals per assessment day, then LOCF onto the marker days.
  MeasurementSeries lesion_series;
  lesion_series.name = "lesion_total";
  for (const auto& [day, per_location] : inputs.lesions) {
    lesion_series.points.emplace_back(day,
                                      aggregate_lesions(per_location, options.lesion_aggregation));
  }
  const auto locf = locf_align(lesion_series, days);

  out.rows.reserve(days.size());
  for (std::size_t t = 0; t < days.size(); ++t) {
    TimelineRow row;
    row.day = days[t];
    row.biomarker = marker_values[t];
    row.lesion_total = locf[t].value;
    row.lesion_provenance = locf[t].provenance;
    for (std::size_t d = 0; d < exposures.drugs.size(); ++d) {
      row.exposures[exposures.drugs[d]] = exposures.indicator[t][d];
    }
    out.rows.push_back(std::move(row));
  }

  const auto labels = derive_combinations(out, out.meta.disease_directed);
  for (std::size_t t = 0; t < out.rows.size(); ++t) out.rows[t].combination = labels[t];

  return out;
}

AlignedTimeline restrict(const AlignedTimeline& tl, const IndexRange& range) {
  if (range.last >= tl.rows.size() || range.first > range.last) {
    throw input_error("row range out of bounds");
  }
  AlignedTimeline out;
  out.meta = tl.meta;
  out.rows.assign(tl.rows.begin() + static_cast<std::ptrdiff_t>(range.first),
                  tl.rows.begin() + static_cast<std::ptrdiff_t>(range.last) + 1);
  return out;
}

SeriesView extract_series(const AlignedTimeline& tl, const std::string& target) {
  SeriesView out;
  out.b.reserve(tl.rows.size());
  out.l.reserve(tl.rows.size());
  out.a.reserve(tl.rows.size());
  out.days.reserve(tl.rows.size());
  for (const auto& row : tl.rows) {
    const auto it = row.exposures.find(target);
    if (it == row.exposures.end()) {
      throw input_error("target drug '" + target + "' not in roster");
    }
    out.b.push_back(row.biomarker);
    out.l.push_back(row.lesion_total);
    out.a.push_back(it->second);
    out.days.push_back(row.day);
  }
  return out;
}

}  // namespace ucate::timeline

#pragma once

// Parameter sweeps over threshold x measure x reference x method, and timing of
// search-region versus whole-frame reconstruction.

#include <algorithm>
#include <chrono>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "navsort/reconstructor.hpp"

namespace navsort {

struct SweepGrid {
  std::vector<double> thresholds{2.0, 1.0, 0.5};
  std::vector<Measure> measures{Measure::ccorr_normed, Measure::ccoeff_normed};
  std::vector<int> references{1, 2};
  std::vector<Method> methods{Method::baseline, Method::updating};

  std::size_t size() const { return thresholds.size() * measures.size() * references.size() * methods.size(); }
};

struct SweepRow {
  Method method = Method::updating;
  Measure measure = Measure::ccoeff_normed;
  double threshold = 1.0;
  int reference = 1;
  double rate = 0.0;     // percent
  double seconds = 0.0;  // tracking (shared across thresholds) + decisions
  int widened = 0;
};

// ROI spec per reference choice; references without an entry fall back to reference 1's.
using RoiSpecs = std::map<int, RoiSpec>;

inline const RoiSpec& rois_for(const RoiSpecs& rois, int reference) {
  auto it = rois.find(reference);
  if (it == rois.end()) it = rois.find(1);
  if (it == rois.end()) throw UsageError("no ROI spec for reference " + std::to_string(reference));
  return it->second;
}

// One row per grid cell, ordered reference, measure, method, threshold (grid order).
// Tracking is shared between thresholds of the same (reference, measure, method).
inline std::vector<SweepRow> sweep(const Dataset& ds, const RoiSpecs& rois, const SweepGrid& grid,
                                   const ReconstructionConfig& base = {}) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (int reference : grid.references)
    for (Measure measure : grid.measures)
      for (Method method : grid.methods) {
        ReconstructionConfig cfg = base;
        cfg.reference = reference;
        cfg.measure = measure;
        cfg.method = method;
        const auto t0 = std::chrono::steady_clock::now();
        const TrackedDataset tracked = track_dataset(ds, rois_for(rois, reference), cfg);
        const double tracking_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (double threshold : grid.thresholds) {
          const auto t1 = std::chrono::steady_clock::now();
          const auto decisions = evaluate_decisions(ds, tracked, threshold, cfg.aggregation, cfg.jobs);
          SweepRow row;
          row.method = method;
          row.measure = measure;
          row.threshold = threshold;
          row.reference = reference;
          row.rate = reconstruction_rate(decisions, tracked.reference.trace.frame_count(), ds.interleaved.size());
          row.seconds = tracking_s + std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
          row.widened = tracked.widened_count();
          rows.push_back(row);
        }
      }
  return rows;
}

inline const SweepRow* find_row(const std::vector<SweepRow>& rows, Method method, Measure measure, double threshold,
                                int reference) {
  for (const auto& r : rows)
    if (r.method == method && r.measure == measure && r.threshold == threshold && r.reference == reference) return &r;
  return nullptr;
}

// rates.csv: one row per (method, measure, threshold, reference).
inline std::string rates_csv(const std::vector<SweepRow>& rows, bool include_timing = true) {
  std::ostringstream out;
  out.precision(17);
  out << "method,measure,threshold_px,reference,rate_percent,widened";
  if (include_timing) out << ",seconds";
  out << '\n';
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.measure) << ',' << r.threshold << ',' << r.reference << ','
        << r.rate << ',' << r.widened;
    if (include_timing) out << ',' << r.seconds;
    out << '\n';
  }
  return out.str();
}

struct TimingResult {
  double full_frame_seconds = 0.0;
  double region_seconds = 0.0;
  double speedup = 0.0;
  int widened = 0;  // fallback searches in the region run
  bool identical_decisions = false;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Runs `config` once with its search radius and once with whole-frame search,
// `repeats` times each, and reports median wall-clock times. Loading is excluded.
inline TimingResult compare_timing(const Dataset& ds, const RoiSpec& rois, const ReconstructionConfig& config,
                                   int repeats = 3) {
  if (!config.search_radius) throw UsageError("timing comparison needs a search radius");
  ReconstructionConfig full = config;
  full.search_radius = std::nullopt;
  std::vector<double> full_times, region_times;
  std::vector<MatchDecision> full_decisions, region_decisions;
  TimingResult result;
  for (int r = 0; r < std::max(1, repeats); ++r) {
    Reconstruction a = reconstruct(ds, rois, full);
    full_times.push_back(a.report.seconds);
    Reconstruction b = reconstruct(ds, rois, config);
    region_times.push_back(b.report.seconds);
    if (r == 0) {
      full_decisions = std::move(a.decisions);
      region_decisions = std::move(b.decisions);
      result.widened = b.report.widened_count;
    }
  }
  result.full_frame_seconds = median(full_times);
  result.region_seconds = median(region_times);
  result.speedup = result.region_seconds > 0.0 ? result.full_frame_seconds / result.region_seconds : 0.0;
  result.identical_decisions = full_decisions.size() == region_decisions.size();
  for (std::size_t i = 0; result.identical_decisions && i < full_decisions.size(); ++i)
    result.identical_decisions = full_decisions[i].accepted == region_decisions[i].accepted;
  return result;
}

inline std::string timing_csv(const TimingResult& t) {
  std::ostringstream out;
  out.precision(17);
  out << "full_frame_seconds,region_seconds,speedup,widened,identical_decisions\n";
  out << t.full_frame_seconds << ',' << t.region_seconds << ',' << t.speedup << ',' << t.widened << ','
      << (t.identical_decisions ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace navsort

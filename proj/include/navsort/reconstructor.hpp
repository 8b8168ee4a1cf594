#pragma once

// 4D assembly: for every eligible reference time point, the data frames of each
// interleaved sequence that pass the matching criterion are averaged into one
// slice and sorted into a volume by slice position.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "navsort/criterion.hpp"
#include "navsort/dataset_io.hpp"
#include "navsort/imgcore.hpp"
#include "navsort/matcher.hpp"
#include "navsort/parallel.hpp"
#include "navsort/tracker.hpp"

namespace navsort {

// baseline: fixed frame-0 templates, whole-frame search.
// updating: per-frame template updates with search regions.
enum class Method { baseline, updating };

inline const char* to_string(Method m) { return m == Method::baseline ? "baseline" : "updating"; }

inline Method parse_method(const std::string& s) {
  if (s == "baseline" || s == "fixed") return Method::baseline;
  if (s == "updating" || s == "update") return Method::updating;
  throw UsageError("unknown method '" + s + "'");
}

// Which templates locate vessels in interleaved navigators under the updating method.
//   matching_reference: the template set of the reference frame each navigator is compared with
//   initial:            the frame-0 set for every comparison
enum class InterleavedTemplates { matching_reference, initial };

inline const char* to_string(InterleavedTemplates t) {
  return t == InterleavedTemplates::matching_reference ? "matching_reference" : "initial";
}

inline InterleavedTemplates parse_interleaved_templates(const std::string& s) {
  if (s == "matching_reference" || s == "matching") return InterleavedTemplates::matching_reference;
  if (s == "initial") return InterleavedTemplates::initial;
  throw UsageError("unknown interleaved template policy '" + s + "'");
}

struct ReconstructionConfig {
  Method method = Method::updating;
  Measure measure = Measure::ccoeff_normed;
  double threshold = 1.0;                 // px
  std::optional<int> search_radius = 10;  // px; nullopt searches whole frames
  double min_score = 0.5;
  Aggregation aggregation = Aggregation::sum;
  int reference = 1;
  InterleavedTemplates interleaved_templates = InterleavedTemplates::matching_reference;
  unsigned jobs = 0;  // 0: hardware concurrency

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["method"] = to_string(method);
    j["measure"] = to_string(measure);
    j["threshold_px"] = threshold;
    j["search_radius_px"] = search_radius ? nlohmann::json(*search_radius) : nlohmann::json(nullptr);
    j["min_score"] = min_score;
    j["aggregation"] = to_string(aggregation);
    j["reference"] = reference;
    j["interleaved_templates"] = to_string(interleaved_templates);
    return j;
  }
};

// Reference trace plus vessel positions in every interleaved navigator.
struct TrackedDataset {
  TrackResult reference;
  LocatedPositions located;

  int widened_count() const { return reference.trace.widened_count() + located.widened_count(); }
};

inline TrackedDataset track_dataset(const Dataset& ds, const RoiSpec& rois, const ReconstructionConfig& config) {
  if (rois.empty()) throw UsageError("ROI spec is empty");
  const ReferenceSequence& ref = ds.reference(config.reference);
  const bool baseline = config.method == Method::baseline;

  TrackOptions options;
  options.measure = config.measure;
  options.mode = baseline ? TrackingMode::fixed : TrackingMode::updating;
  options.search_radius = baseline ? std::nullopt : config.search_radius;
  options.min_score = config.min_score;

  TrackedDataset out;
  out.reference = track_reference(ref, rois, options);

  std::vector<std::size_t> navs;
  for (const auto& seq : ds.interleaved) navs.push_back(seq.navigator_count());
  const bool per_reference =
      !baseline && config.interleaved_templates == InterleavedTemplates::matching_reference;
  const std::size_t sets = per_reference ? out.reference.template_sets.size() : 1;
  out.located = LocatedPositions(sets, navs, rois.size());

  const std::size_t sequences = ds.interleaved.size();
  parallel_for(sets * sequences, config.jobs, [&](std::size_t job) {
    const std::size_t set = job / sequences;
    const std::size_t s = job % sequences;
    const auto chain =
        locate_sequence(ds.interleaved[s], out.reference.template_sets[set], options.search_radius, config.min_score);
    for (std::size_t k = 0; k < chain.size(); ++k) out.located.store(set, s, k, chain[k]);
  });
  return out;
}

// Every eligible (time point, sequence, data frame) decision, ordered by time
// point, then sequence (acquisition order), then frame ordinal.
inline std::vector<MatchDecision> evaluate_decisions(const Dataset& ds, const TrackedDataset& tracked,
                                                     double threshold, Aggregation aggregation, unsigned jobs = 0) {
  const std::size_t frames = tracked.reference.trace.frame_count();
  if (frames < 3) return {};
  const std::size_t eligible = frames - 2;
  std::vector<std::vector<MatchDecision>> per_tp(eligible);
  parallel_for(eligible, jobs, [&](std::size_t e) {
    const std::size_t tp = e + 1;
    auto& out = per_tp[e];
    for (std::size_t s = 0; s < ds.interleaved.size(); ++s)
      for (std::size_t k = 0; k < ds.interleaved[s].data_count(); ++k)
        out.push_back(decide_match(tp, s, InterleavedSequence::data_ordinal(k), tracked.reference.trace,
                                   tracked.located, threshold, aggregation));
  });
  std::vector<MatchDecision> all;
  for (auto& v : per_tp)
    for (auto& d : v) all.push_back(std::move(d));
  return all;
}

// Pixelwise arithmetic mean in double precision.
inline Grid<double> average_bin(std::span<const Frame* const> frames) {
  if (frames.empty()) throw UsageError("cannot average an empty bin");
  const Frame& first = *frames.front();
  Grid<double> out(first.width, first.height, 0.0);
  auto acc = out.values();
  for (const Frame* f : frames) {
    if (!f->same_shape(first)) throw UsageError("bin frames differ in dimensions");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += f->pixels[i];
  }
  const double n = static_cast<double>(frames.size());
  for (double& v : acc) v /= n;
  return out;
}

inline Grid<double> average_bin(const std::vector<Frame>& frames) {
  std::vector<const Frame*> ptrs;
  for (const auto& f : frames) ptrs.push_back(&f);
  return average_bin(std::span<const Frame* const>(ptrs));
}

struct SliceBin {
  int reference_timepoint = 0;
  int sequence_index = 0;
  double slice_position_mm = 0.0;
  std::vector<int> matched_frames;  // data frame ordinals
  std::optional<Grid<double>> averaged_slice;

  bool complete() const { return averaged_slice.has_value(); }
};

struct Volume4D {
  std::vector<int> timepoints;              // eligible reference time points
  std::vector<double> slice_positions_mm;   // ascending
  std::vector<int> slice_sequences;         // interleaved sequence per slice
  int width = 0;
  int height = 0;
  std::array<double, 3> spacing_mm{1.0, 1.0, 4.0};
  std::vector<SliceBin> bins;               // [timepoint index][slice]

  std::size_t slice_count() const { return slice_positions_mm.size(); }
  const SliceBin& bin(std::size_t tp_index, std::size_t slice) const { return bins[tp_index * slice_count() + slice]; }
  bool complete(std::size_t tp_index, std::size_t slice) const { return bin(tp_index, slice).complete(); }

  std::size_t filled_cells() const {
    std::size_t n = 0;
    for (const auto& b : bins) n += b.complete() ? 1 : 0;
    return n;
  }
};

// Clamped to [0, 65535] and rounded half to even.
inline std::uint16_t to_u16(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 65535.0) return 65535;
  return static_cast<std::uint16_t>(std::nearbyint(v));
}

struct SequenceStats {
  int sequence_index = 0;
  std::string name;
  double slice_position_mm = 0.0;
  int matched_frames = 0;     // accepted (time point, data frame) pairs
  int filled_timepoints = 0;  // time points with at least one match
};

struct ReconstructionReport {
  double reconstruction_rate = 0.0;  // percent of eligible cells
  std::size_t eligible_timepoints = 0;
  std::size_t slice_positions = 0;
  std::vector<SequenceStats> sequences;  // acquisition order
  std::vector<std::pair<int, std::vector<double>>> missing;  // time point -> missing slice positions
  double seconds = 0.0;
  int widened_count = 0;
  double acquisition_correlation = std::numeric_limits<double>::quiet_NaN();
  nlohmann::json config;
};

struct Reconstruction {
  Volume4D volume;
  ReconstructionReport report;
  std::vector<MatchDecision> decisions;
  TrackTrace trace;
};

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2 || b.size() != n) return std::numeric_limits<double>::quiet_NaN();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

// Percentage of (eligible time point x slice position) cells with at least one match.
inline double reconstruction_rate(std::span<const MatchDecision> decisions, std::size_t reference_frames,
                                  std::size_t sequences) {
  if (reference_frames < 3 || sequences == 0) return 0.0;
  const std::size_t eligible = reference_frames - 2;
  std::vector<char> filled(eligible * sequences, 0);
  for (const auto& d : decisions)
    if (d.accepted) filled[static_cast<std::size_t>(d.reference_timepoint - 1) * sequences + d.sequence_index] = 1;
  std::size_t n = 0;
  for (char c : filled) n += c ? 1 : 0;
  return 100.0 * static_cast<double>(n) / static_cast<double>(eligible * sequences);
}

// Bins accepted decisions into a volume and derives the report.
inline Reconstruction assemble(const Dataset& ds, const TrackedDataset& tracked, std::vector<MatchDecision> decisions,
                               const ReconstructionConfig& config, unsigned jobs = 0) {
  Reconstruction out;
  out.trace = tracked.reference.trace;
  const std::size_t frames = out.trace.frame_count();
  const std::size_t eligible = frames >= 3 ? frames - 2 : 0;
  const std::size_t sequences = ds.interleaved.size();
  const auto order = ds.slice_order();

  Volume4D& vol = out.volume;
  vol.width = ds.frame_width();
  vol.height = ds.frame_height();
  vol.spacing_mm = {ds.in_plane_spacing_mm.x, ds.in_plane_spacing_mm.y, ds.slice_gap_mm};
  for (std::size_t e = 0; e < eligible; ++e) vol.timepoints.push_back(static_cast<int>(e + 1));
  std::vector<std::size_t> slice_of_sequence(sequences);
  for (std::size_t k = 0; k < order.size(); ++k) {
    vol.slice_positions_mm.push_back(ds.interleaved[order[k]].data_slice_position_mm);
    vol.slice_sequences.push_back(static_cast<int>(order[k]));
    slice_of_sequence[order[k]] = k;
  }
  vol.bins.resize(eligible * sequences);
  for (std::size_t e = 0; e < eligible; ++e)
    for (std::size_t k = 0; k < sequences; ++k) {
      SliceBin& b = vol.bins[e * sequences + k];
      b.reference_timepoint = static_cast<int>(e + 1);
      b.sequence_index = vol.slice_sequences[k];
      b.slice_position_mm = vol.slice_positions_mm[k];
    }

  auto& report = out.report;
  report.sequences.resize(sequences);
  for (std::size_t s = 0; s < sequences; ++s)
    report.sequences[s] = {static_cast<int>(s), ds.interleaved[s].name, ds.interleaved[s].data_slice_position_mm, 0, 0};
  for (const auto& d : decisions) {
    if (!d.accepted) continue;
    const std::size_t e = static_cast<std::size_t>(d.reference_timepoint - 1);
    vol.bins[e * sequences + slice_of_sequence[d.sequence_index]].matched_frames.push_back(d.data_frame_index);
    ++report.sequences[d.sequence_index].matched_frames;
  }

  parallel_for(vol.bins.size(), jobs, [&](std::size_t i) {
    SliceBin& b = vol.bins[i];
    if (b.matched_frames.empty()) return;
    std::vector<const Frame*> matched;
    for (int f : b.matched_frames) matched.push_back(&ds.interleaved[b.sequence_index].frames[f]);
    b.averaged_slice = average_bin(std::span<const Frame* const>(matched));
  });

  for (std::size_t e = 0; e < eligible; ++e) {
    std::vector<double> missing;
    for (std::size_t k = 0; k < sequences; ++k) {
      const SliceBin& b = vol.bins[e * sequences + k];
      if (b.complete())
        ++report.sequences[b.sequence_index].filled_timepoints;
      else
        missing.push_back(b.slice_position_mm);
    }
    if (!missing.empty()) report.missing.emplace_back(static_cast<int>(e + 1), std::move(missing));
  }
  report.eligible_timepoints = eligible;
  report.slice_positions = sequences;
  report.reconstruction_rate =
      eligible * sequences == 0 ? 0.0
                                : 100.0 * static_cast<double>(vol.filled_cells()) / static_cast<double>(eligible * sequences);
  report.widened_count = tracked.widened_count();
  report.config = config.to_json();
  std::vector<double> ordinal, filled;
  for (const auto& s : report.sequences) {
    ordinal.push_back(s.sequence_index);
    filled.push_back(s.filled_timepoints);
  }
  report.acquisition_correlation = pearson(ordinal, filled);
  out.decisions = std::move(decisions);
  return out;
}

// Full pipeline: track, locate, decide, bin. Deterministic for fixed inputs.
inline Reconstruction reconstruct(const Dataset& ds, const RoiSpec& rois, const ReconstructionConfig& config) {
  if (rois.empty()) throw UsageError("ROI spec is empty");
  const auto start = std::chrono::steady_clock::now();
  TrackedDataset tracked;
  try {
    tracked = track_dataset(ds, rois, config);
  } catch (const TrackingError& e) {
    throw TrackingError(std::string("tracking reference ") + std::to_string(config.reference) + ": " + e.what());
  }
  auto decisions = evaluate_decisions(ds, tracked, config.threshold, config.aggregation, config.jobs);
  Reconstruction out = assemble(ds, tracked, std::move(decisions), config, config.jobs);
  out.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline nlohmann::json report_json(const ReconstructionReport& r, bool include_timing) {
  nlohmann::json j;
  j["reconstruction_rate_percent"] = r.reconstruction_rate;
  j["eligible_timepoints"] = r.eligible_timepoints;
  j["slice_positions"] = r.slice_positions;
  j["widened_searches"] = r.widened_count;
  j["acquisition_correlation"] =
      std::isnan(r.acquisition_correlation) ? nlohmann::json(nullptr) : nlohmann::json(r.acquisition_correlation);
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : r.sequences)
    seqs.push_back({{"sequence_index", s.sequence_index},
                    {"name", s.name},
                    {"slice_position_mm", s.slice_position_mm},
                    {"matched_frames", s.matched_frames},
                    {"filled_timepoints", s.filled_timepoints}});
  j["sequences"] = seqs;
  nlohmann::json missing = nlohmann::json::array();
  for (const auto& [tp, positions] : r.missing) missing.push_back({{"timepoint", tp}, {"slice_positions_mm", positions}});
  j["incomplete_timepoints"] = missing;
  if (include_timing) j["seconds"] = r.seconds;
  j["config"] = r.config;
  return j;
}

inline std::string timepoint_filename(int tp) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%04d.u16le", tp);
  return buf;
}

// Output directory: volume4d.json, tXXXX.u16le stacks, report.json, matches.csv,
// acquisition_correlation.csv. Wall-clock time only enters report.json when asked,
// so repeated runs produce identical directories.
inline void write_reconstruction(const Reconstruction& rec, const std::filesystem::path& dir,
                                 bool include_timing = false) {
  std::filesystem::create_directories(dir);
  const Volume4D& vol = rec.volume;
  const std::size_t slices = vol.slice_count();
  const std::size_t pixels = static_cast<std::size_t>(vol.width) * static_cast<std::size_t>(vol.height);

  nlohmann::json manifest;
  manifest["width"] = vol.width;
  manifest["height"] = vol.height;
  manifest["slices"] = slices;
  manifest["spacing_mm"] = {vol.spacing_mm[0], vol.spacing_mm[1], vol.spacing_mm[2]};
  manifest["slice_positions_mm"] = vol.slice_positions_mm;
  manifest["slice_sequences"] = vol.slice_sequences;
  manifest["timepoints"] = vol.timepoints;
  nlohmann::json files = nlohmann::json::array();
  nlohmann::json completeness = nlohmann::json::array();
  for (std::size_t e = 0; e < vol.timepoints.size(); ++e) {
    std::vector<unsigned char> bytes;
    bytes.reserve(slices * pixels * 2);
    std::vector<bool> row;
    std::vector<std::uint16_t> slice(pixels);
    for (std::size_t k = 0; k < slices; ++k) {
      const SliceBin& b = vol.bin(e, k);
      row.push_back(b.complete());
      if (b.complete()) {
        const auto values = b.averaged_slice->values();
        for (std::size_t i = 0; i < pixels; ++i) slice[i] = to_u16(values[i]);
      } else {
        std::fill(slice.begin(), slice.end(), std::uint16_t{0});
      }
      append_u16le(bytes, slice);
    }
    const std::string name = timepoint_filename(vol.timepoints[e]);
    write_bytes(dir / name, bytes);
    files.push_back(name);
    completeness.push_back(row);
  }
  manifest["files"] = files;
  manifest["completeness"] = completeness;
  manifest["config"] = rec.report.config;
  write_text(dir / "volume4d.json", manifest.dump(2) + "\n");
  write_text(dir / "report.json", report_json(rec.report, include_timing).dump(2) + "\n");
  write_text(dir / "matches.csv", decisions_csv(rec.decisions, true));

  std::ostringstream corr;
  corr.precision(17);
  corr << "reference,sequence_index,name,slice_position_mm,matched_frames,filled_timepoints\n";
  const int reference = rec.report.config.value("reference", 0);
  for (const auto& s : rec.report.sequences)
    corr << reference << ',' << s.sequence_index << ',' << s.name << ',' << s.slice_position_mm << ','
         << s.matched_frames << ',' << s.filled_timepoints << '\n';
  write_text(dir / "acquisition_correlation.csv", corr.str());
}

}  // namespace navsort

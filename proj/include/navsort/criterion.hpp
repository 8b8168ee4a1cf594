#pragma once

// Breathing-state matching criterion.
//
// A reference time point i and a data frame d of an interleaved sequence show the
// same breathing state when the vessel displacements between their enclosing
// navigators, (ref i-1 <-> nav d-1) and (ref i+1 <-> nav d+1), aggregate to
// strictly less than the threshold.

#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "navsort/imgcore.hpp"
#include "navsort/tracker.hpp"

namespace navsort {

enum class Aggregation { sum, mean };

inline const char* to_string(Aggregation a) { return a == Aggregation::sum ? "sum" : "mean"; }

inline Aggregation parse_aggregation(const std::string& s) {
  if (s == "sum") return Aggregation::sum;
  if (s == "mean") return Aggregation::mean;
  throw UsageError("unknown aggregation '" + s + "'");
}

struct DisplacementSummary {
  std::vector<double> preceding;  // per vessel, ref i-1 <-> nav d-1
  std::vector<double> following;  // per vessel, ref i+1 <-> nav d+1
  double total = 0.0;             // sum of all magnitudes
};

struct MatchDecision {
  int reference_timepoint = 0;
  int sequence_index = 0;
  int data_frame_index = 0;  // frame ordinal inside the interleaved sequence
  DisplacementSummary summary;
  double aggregate = 0.0;  // value compared against the threshold
  double threshold = 0.0;
  bool accepted = false;
};

// Euclidean displacement per vessel.
inline std::vector<double> pair_displacement(std::span<const Point2> ref_positions,
                                             std::span<const Point2> nav_positions) {
  if (ref_positions.size() != nav_positions.size())
    throw UsageError("vessel count mismatch: " + std::to_string(ref_positions.size()) + " vs " +
                     std::to_string(nav_positions.size()));
  std::vector<double> out;
  out.reserve(ref_positions.size());
  for (std::size_t v = 0; v < ref_positions.size(); ++v) out.push_back(norm(nav_positions[v] - ref_positions[v]));
  return out;
}

// Vessel positions located in interleaved navigators, keyed by the reference
// frame whose templates were used. A table with a single template set serves
// every reference frame.
class LocatedPositions {
 public:
  LocatedPositions() = default;
  LocatedPositions(std::size_t set_count, std::vector<std::size_t> navigators_per_sequence, std::size_t vessels)
      : set_count_(set_count), vessels_(vessels), navs_(std::move(navigators_per_sequence)) {
    offsets_.reserve(navs_.size());
    for (std::size_t n : navs_) {
      offsets_.push_back(navs_per_set_);
      navs_per_set_ += n;
    }
    points_.resize(set_count_ * navs_per_set_ * vessels_);
    filled_.assign(set_count_ * navs_per_set_, 0);
  }

  std::size_t set_count() const { return set_count_; }
  std::size_t vessel_count() const { return vessels_; }
  std::size_t sequence_count() const { return navs_.size(); }
  std::size_t navigator_count(std::size_t seq) const { return navs_.at(seq); }
  bool shared() const { return set_count_ == 1; }

  void store(std::size_t set, std::size_t seq, std::size_t nav, std::span<const TrackPoint> points) {
    if (points.size() != vessels_) throw UsageError("located point count differs from vessel count");
    const std::size_t slot = slot_index(set, seq, nav);
    std::copy(points.begin(), points.end(), points_.begin() + static_cast<std::ptrdiff_t>(slot * vessels_));
    filled_[slot] = 1;
  }

  // Empty span when nothing was stored for this slot.
  std::span<const TrackPoint> find(std::size_t reference_frame, std::size_t seq, std::size_t nav) const {
    const std::size_t set = shared() ? 0 : reference_frame;
    if (set >= set_count_ || seq >= navs_.size() || nav >= navs_[seq]) return {};
    const std::size_t slot = slot_index(set, seq, nav);
    if (!filled_[slot]) return {};
    return {points_.data() + slot * vessels_, vessels_};
  }

  int widened_count() const {
    int n = 0;
    for (std::size_t s = 0; s < filled_.size(); ++s)
      if (filled_[s])
        for (std::size_t v = 0; v < vessels_; ++v) n += points_[s * vessels_ + v].widened ? 1 : 0;
    return n;
  }

 private:
  std::size_t slot_index(std::size_t set, std::size_t seq, std::size_t nav) const {
    return set * navs_per_set_ + offsets_.at(seq) + nav;
  }

  std::size_t set_count_ = 0;
  std::size_t vessels_ = 0;
  std::size_t navs_per_set_ = 0;
  std::vector<std::size_t> navs_;
  std::vector<std::size_t> offsets_;
  std::vector<TrackPoint> points_;
  std::vector<char> filled_;
};

inline bool eligible_timepoint(std::size_t timepoint, std::size_t reference_frames) {
  return timepoint >= 1 && timepoint + 1 < reference_frames;
}

// Decision for reference time point `ref_tp` against data frame ordinal `data_ordinal`
// of interleaved sequence `seq`.
inline MatchDecision decide_match(std::size_t ref_tp, std::size_t seq, std::size_t data_ordinal,
                                  const TrackTrace& reference_trace, const LocatedPositions& located,
                                  double threshold, Aggregation aggregation = Aggregation::sum) {
  if (!eligible_timepoint(ref_tp, reference_trace.frame_count()))
    throw BoundaryError("reference time point " + std::to_string(ref_tp) + " lacks an enclosing navigator");
  if (data_ordinal % 2 == 0 || seq >= located.sequence_count() ||
      (data_ordinal + 1) / 2 >= located.navigator_count(seq))
    throw UsageError("frame ordinal " + std::to_string(data_ordinal) + " is not an enclosed data frame of sequence " +
                     std::to_string(seq));
  const std::size_t nav_before = (data_ordinal - 1) / 2;
  const std::size_t nav_after = (data_ordinal + 1) / 2;

  const auto nav_positions = [&](std::size_t ref_frame, std::size_t nav) {
    const auto points = located.find(ref_frame, seq, nav);
    if (points.empty())
      throw DependencyError("no located positions for sequence " + std::to_string(seq) + " navigator " +
                            std::to_string(nav) + " under reference frame " + std::to_string(ref_frame));
    std::vector<Point2> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.position);
    return out;
  };

  MatchDecision d;
  d.reference_timepoint = static_cast<int>(ref_tp);
  d.sequence_index = static_cast<int>(seq);
  d.data_frame_index = static_cast<int>(data_ordinal);
  d.threshold = threshold;
  d.summary.preceding = pair_displacement(reference_trace.positions(ref_tp - 1), nav_positions(ref_tp - 1, nav_before));
  d.summary.following = pair_displacement(reference_trace.positions(ref_tp + 1), nav_positions(ref_tp + 1, nav_after));
  for (double m : d.summary.preceding) d.summary.total += m;
  for (double m : d.summary.following) d.summary.total += m;
  const std::size_t terms = d.summary.preceding.size() + d.summary.following.size();
  d.aggregate = aggregation == Aggregation::sum ? d.summary.total : d.summary.total / static_cast<double>(terms);
  d.accepted = d.aggregate < threshold;
  return d;
}

// CSV: timepoint,sequence,data_frame,total,accepted
inline std::string decisions_csv(std::span<const MatchDecision> decisions, bool accepted_only = false) {
  std::ostringstream out;
  out.precision(17);
  out << "timepoint,sequence,data_frame,total,accepted\n";
  for (const auto& d : decisions) {
    if (accepted_only && !d.accepted) continue;
    out << d.reference_timepoint << ',' << d.sequence_index << ',' << d.data_frame_index << ',' << d.aggregate << ','
        << (d.accepted ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace navsort

#pragma once

// Vessel tracking through navigator frames.
//
// Positions are template top-left corners in frame pixels. A located position is
// the template anchor plus the offset between the peak found in the target frame
// and the peak the same template produces on its own source frame. The self-peak
// absorbs the bias of the subpixel estimator, so an unchanged frame maps back to
// the anchor exactly and template updates accumulate no drift.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "navsort/dataset_io.hpp"
#include "navsort/imgcore.hpp"
#include "navsort/matcher.hpp"

namespace navsort {

enum class TrackingMode { fixed, updating };

inline const char* to_string(TrackingMode m) { return m == TrackingMode::fixed ? "fixed" : "updating"; }

struct Roi {
  std::string label;
  Rect rect;
};

// Manually chosen vessel regions on reference frame 0.
struct RoiSpec {
  std::vector<Roi> rois;

  std::size_t size() const { return rois.size(); }
  bool empty() const { return rois.empty(); }
};

inline void validate(const RoiSpec& spec, int width, int height) {
  if (spec.empty()) throw UsageError("ROI spec is empty");
  for (const auto& roi : spec.rois) {
    const Rect& r = roi.rect;
    if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.x + r.w > width || r.y + r.h > height)
      throw ValidationError("ROI '" + roi.label + "' does not lie inside the " + std::to_string(width) + "x" +
                            std::to_string(height) + " frame");
  }
}

// JSON array of {label, x, y, w, h}.
inline RoiSpec parse_rois(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("ROI spec must be a JSON array");
  RoiSpec spec;
  for (const auto& e : j) {
    try {
      spec.rois.push_back({e.at("label").get<std::string>(),
                           {e.at("x").get<int>(), e.at("y").get<int>(), e.at("w").get<int>(), e.at("h").get<int>()}});
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError(std::string("malformed ROI entry: ") + ex.what());
    }
  }
  return spec;
}

inline RoiSpec load_rois(const std::filesystem::path& path) {
  try {
    return parse_rois(read_json(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline nlohmann::json to_json(const RoiSpec& spec) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& roi : spec.rois)
    out.push_back({{"label", roi.label}, {"x", roi.rect.x}, {"y", roi.rect.y}, {"w", roi.rect.w}, {"h", roi.rect.h}});
  return out;
}

// Templates cut from one reference frame, with their self-match peaks.
struct TemplateSet {
  int frame_index = 0;
  Measure measure = Measure::ccoeff_normed;
  std::vector<Template> templates;
  std::vector<Point2> self_peaks;

  std::size_t size() const { return templates.size(); }
};

struct TrackPoint {
  Point2 position;
  double score = 0.0;
  bool widened = false;
};

struct TrackTrace {
  TrackingMode mode = TrackingMode::updating;
  std::vector<std::string> labels;
  std::vector<std::vector<TrackPoint>> frames;  // [frame][vessel]

  std::size_t frame_count() const { return frames.size(); }
  std::size_t vessel_count() const { return labels.size(); }
  Point2 position(std::size_t frame, std::size_t vessel) const { return frames[frame][vessel].position; }

  std::vector<Point2> positions(std::size_t frame) const {
    std::vector<Point2> out;
    out.reserve(frames[frame].size());
    for (const auto& p : frames[frame]) out.push_back(p.position);
    return out;
  }

  int widened_count() const {
    int n = 0;
    for (const auto& f : frames)
      for (const auto& p : f) n += p.widened ? 1 : 0;
    return n;
  }
};

struct TrackOptions {
  Measure measure = Measure::ccoeff_normed;
  TrackingMode mode = TrackingMode::updating;
  std::optional<int> search_radius = 10;  // nullopt: whole frame
  double min_score = 0.5;
};

struct TrackResult {
  TrackTrace trace;
  std::vector<TemplateSet> template_sets;  // one per frame when updating, one when fixed
};

namespace detail {

inline constexpr int kSelfPeakRadius = 2;

inline Point2 clamp_to_domain(Point2 p, const Frame& frame, const Template& tpl) {
  return {std::clamp(p.x, 0.0, static_cast<double>(frame.width - tpl.width())),
          std::clamp(p.y, 0.0, static_cast<double>(frame.height - tpl.height()))};
}

inline Point2 self_peak(const Frame& source, const Template& tpl, Measure measure) {
  return match_template(source, tpl, measure, SearchRegion{tpl.anchor(), kSelfPeakRadius},
                        -std::numeric_limits<double>::infinity())
      .position;
}

inline std::optional<SearchRegion> region_around(const std::optional<Point2>& center, std::optional<int> radius) {
  if (!center || !radius) return std::nullopt;
  return SearchRegion{*center, *radius};
}

}  // namespace detail

inline bool usable_template(const Template& tpl, Measure measure) {
  return measure == Measure::ccoeff_normed ? !tpl.degenerate() : tpl.energy() > 0.0;
}

// Throws TrackingError naming the vessel and frame when a template is degenerate.
inline TemplateSet make_template_set(const Frame& frame, int frame_index, std::vector<Template> templates,
                                     Measure measure, const std::vector<std::string>& labels = {}) {
  TemplateSet set{frame_index, measure, std::move(templates), {}};
  set.self_peaks.reserve(set.templates.size());
  for (std::size_t v = 0; v < set.templates.size(); ++v) {
    if (!usable_template(set.templates[v], measure))
      throw TrackingError("degenerate template for vessel '" + (v < labels.size() ? labels[v] : std::to_string(v)) +
                          "' at frame " + std::to_string(frame_index));
    set.self_peaks.push_back(detail::self_peak(frame, set.templates[v], measure));
  }
  return set;
}

inline TemplateSet initial_template_set(const Frame& frame0, const RoiSpec& rois, Measure measure) {
  validate(rois, frame0.width, frame0.height);
  std::vector<Template> templates;
  std::vector<std::string> labels;
  for (const auto& roi : rois.rois) {
    templates.push_back(Template::cut(frame0, roi.rect));
    labels.push_back(roi.label);
  }
  return make_template_set(frame0, 0, std::move(templates), measure, labels);
}

// Locates every vessel of `templates` in `nav`. Each vessel is searched around its
// prior position when one is given (and a radius is set), across the whole frame otherwise.
inline std::vector<TrackPoint> locate_in_navigator(const Frame& nav, const TemplateSet& templates,
                                                   const std::vector<Point2>* prior, std::optional<int> search_radius,
                                                   double min_score) {
  if (prior && prior->size() != templates.size())
    throw UsageError("prior has " + std::to_string(prior->size()) + " positions for " +
                     std::to_string(templates.size()) + " templates");
  std::vector<TrackPoint> out;
  out.reserve(templates.size());
  for (std::size_t v = 0; v < templates.size(); ++v) {
    const Template& tpl = templates.templates[v];
    const auto center = prior ? std::optional<Point2>((*prior)[v]) : std::nullopt;
    const MatchResult m =
        match_template(nav, tpl, templates.measure, detail::region_around(center, search_radius), min_score);
    const Point2 located = tpl.anchor() + (m.position - templates.self_peaks[v]);
    out.push_back({detail::clamp_to_domain(located, nav, tpl), m.score, m.widened});
  }
  return out;
}

// Tracks all ROIs through a reference sequence.
//  fixed:    frame-0 templates, whole-frame search in every frame.
//  updating: frame i-1 templates searched around the frame i-1 positions, then
//            re-cut from frame i at the refined floating-point positions.
inline TrackResult track_reference(const ReferenceSequence& ref, const RoiSpec& rois, const TrackOptions& options) {
  if (ref.frames.empty()) throw UsageError("reference sequence is empty");
  TrackResult result;
  result.trace.mode = options.mode;
  for (const auto& roi : rois.rois) result.trace.labels.push_back(roi.label);

  const Frame& frame0 = ref.frames.front();
  result.template_sets.push_back(initial_template_set(frame0, rois, options.measure));
  std::vector<TrackPoint> first;
  for (const auto& roi : rois.rois)
    first.push_back({{static_cast<double>(roi.rect.x), static_cast<double>(roi.rect.y)}, 1.0, false});
  result.trace.frames.push_back(std::move(first));

  for (std::size_t i = 1; i < ref.frames.size(); ++i) {
    const Frame& frame = ref.frames[i];
    if (options.mode == TrackingMode::fixed) {
      result.trace.frames.push_back(
          locate_in_navigator(frame, result.template_sets.front(), nullptr, std::nullopt, options.min_score));
      continue;
    }
    const TemplateSet& previous = result.template_sets.back();
    const std::vector<Point2> prior = result.trace.positions(i - 1);
    std::vector<TrackPoint> located =
        locate_in_navigator(frame, previous, &prior, options.search_radius, options.min_score);
    std::vector<Template> updated;
    updated.reserve(located.size());
    for (std::size_t v = 0; v < located.size(); ++v) {
      const Template& old = previous.templates[v];
      located[v].position = detail::clamp_to_domain(located[v].position, frame, old);
      updated.push_back(Template::cut(frame, located[v].position, old.width(), old.height()));
    }
    result.template_sets.push_back(
        make_template_set(frame, static_cast<int>(i), std::move(updated), options.measure, result.trace.labels));
    result.trace.frames.push_back(std::move(located));
  }
  return result;
}

// Locates vessels in every navigator of an interleaved sequence. Navigator k is
// searched around the positions found in navigator k-1; the first navigator is
// searched around the template anchors, since navigators image the same plane
// as the reference sequence.
inline std::vector<std::vector<TrackPoint>> locate_sequence(const InterleavedSequence& seq,
                                                            const TemplateSet& templates,
                                                            std::optional<int> search_radius, double min_score) {
  std::vector<std::vector<TrackPoint>> out;
  out.reserve(seq.navigator_count());
  std::vector<Point2> prior;
  for (const auto& tpl : templates.templates) prior.push_back(tpl.anchor());
  for (std::size_t k = 0; k < seq.navigator_count(); ++k) {
    const Frame& nav = seq.frames[InterleavedSequence::navigator_ordinal(k)];
    auto located = locate_in_navigator(nav, templates, &prior, search_radius, min_score);
    prior.clear();
    for (const auto& p : located) prior.push_back(p.position);
    out.push_back(std::move(located));
  }
  return out;
}

// CSV: vessel,frame,x,y,score,widened
inline std::string trace_csv(const TrackTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "vessel,frame,x,y,score,widened\n";
  for (std::size_t v = 0; v < trace.vessel_count(); ++v)
    for (std::size_t f = 0; f < trace.frame_count(); ++f) {
      const TrackPoint& p = trace.frames[f][v];
      out << trace.labels[v] << ',' << f << ',' << p.position.x << ',' << p.position.y << ',' << p.score << ','
          << (p.widened ? 1 : 0) << '\n';
    }
  return out.str();
}

}  // namespace navsort

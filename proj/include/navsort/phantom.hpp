#pragma once

// Deterministic synthetic navigator/data datasets with known vessel motion.
//
// Vessels are Gaussian blobs translated by a multi-component breathing signal.
// Appearance modulation fades the main blob and widens it as the breathing state
// approaches inhalation, while an optional satellite blob (a neighbouring vessel
// entering the slice) brightens. Noise is additive Gaussian with a stream derived
// from (seed, sequence, frame), so frames can be rendered in any order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "navsort/criterion.hpp"
#include "navsort/dataset_io.hpp"
#include "navsort/imgcore.hpp"
#include "navsort/reconstructor.hpp"
#include "navsort/tracker.hpp"

namespace navsort {

struct BreathingComponent {
  double period_ms = 4000.0;
  double weight = 1.0;
};

// value(t) = amplitude * sum_k w_k sin(2 pi t / P_k + phase_k) / sum_k |w_k| + drift * t
struct BreathingSignal {
  double amplitude_px = 4.0;
  std::vector<BreathingComponent> components{{4000.0, 1.0}, {11000.0, 0.35}};
  double drift_px_per_min = 0.0;
  std::uint64_t variability_seed = 1;

  double periodic(double t_ms, std::span<const double> phases) const {
    double value = 0.0;
    double weights = 0.0;
    for (std::size_t k = 0; k < components.size(); ++k) {
      value += components[k].weight * std::sin(2.0 * std::numbers::pi * t_ms / components[k].period_ms + phases[k]);
      weights += std::abs(components[k].weight);
    }
    return weights > 0.0 ? amplitude_px * value / weights : 0.0;
  }
};

struct SatelliteSpec {
  Point2 offset{5.0, 0.0};
  double radius = 2.5;
  double peak = 700.0;
};

struct VesselSpec {
  Point2 center{20.0, 20.0};  // at breathing value 0
  Point2 motion{0.3, 1.0};    // displacement per px of breathing value
  double radius = 2.5;        // Gaussian sigma, px
  double peak = 800.0;        // above background
  double modulation_depth = 0.0;  // in [0, 1]
  std::optional<SatelliteSpec> satellite;
};

struct SequencePerturbation {
  double offset_px = 0.0;
  double amplitude_scale = 1.0;
};

struct PhantomSpec {
  int width = 64;
  int height = 64;
  std::size_t reference_frames = 101;
  std::size_t interleaved_sequences = 10;
  std::size_t navigators_per_sequence = 31;  // data frames = navigators - 1
  double frame_period_ms = 200.0;
  double background = 200.0;
  double organ_intensity = 400.0;
  double noise_std = 0.0;
  Point2 in_plane_spacing_mm{1.82, 1.82};
  double slice_gap_mm = 4.0;
  double navigator_position_mm = 0.0;
  double first_slice_mm = -20.0;
  BreathingSignal signal;
  std::vector<VesselSpec> vessels{VesselSpec{}};
  std::vector<SequencePerturbation> perturbations;  // by interleaved index, missing entries are neutral
  bool replay_reference = false;  // interleaved frame f replays reference-1 frame f mod N
  int roi_half_size = 7;
};

struct TruthFrame {
  int frame = 0;        // frame ordinal in its sequence
  double state = 0.0;   // breathing value, px
  std::vector<Point2> vessels;  // true main-blob centres
};

struct SequenceTruth {
  std::string name;
  std::vector<TruthFrame> navigators;
};

struct GroundTruth {
  SequenceTruth reference_1;
  SequenceTruth reference_2;
  std::vector<SequenceTruth> interleaved;

  const SequenceTruth& reference(int which) const {
    if (which == 1) return reference_1;
    if (which == 2) return reference_2;
    throw UsageError("reference must be 1 or 2");
  }
};

struct Phantom {
  Dataset dataset;
  GroundTruth truth;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

inline double gaussian(double dx, double dy, double sigma) {
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

// Rendering state of one frame.
struct FrameState {
  double value = 0.0;       // breathing value, px
  double inhalation = 0.0;  // normalized state in [0, 1]
};

struct SequencePlan {
  std::string name;
  std::uint64_t stream = 0;  // noise stream id
  std::vector<double> phases;
  double start_ms = 0.0;
  SequencePerturbation perturbation;
  bool interleaved = false;
  double data_position_mm = 0.0;
  int slice_index = 0;
};

}  // namespace detail

inline void validate(const PhantomSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw SpecError("phantom frame dimensions must be positive");
  if (spec.reference_frames < 3) throw SpecError("reference sequences need at least 3 frames");
  if (spec.interleaved_sequences < 1) throw SpecError("at least one interleaved sequence is required");
  if (spec.navigators_per_sequence < 2) throw SpecError("interleaved sequences need at least 2 navigators");
  if (!(spec.frame_period_ms > 0.0)) throw SpecError("frame period must be positive");
  if (spec.noise_std < 0.0) throw SpecError("noise std must be non-negative");
  if (spec.vessels.empty()) throw SpecError("phantom needs at least one vessel");
  if (!(spec.slice_gap_mm > 0.0)) throw SpecError("slice gap must be positive");
  for (const auto& c : spec.signal.components)
    if (!(c.period_ms > 0.0)) throw SpecError("breathing periods must be positive");
  for (const auto& v : spec.vessels) {
    if (!(v.radius > 0.0)) throw SpecError("vessel radius must be positive");
    if (v.modulation_depth < 0.0 || v.modulation_depth > 1.0) throw SpecError("modulation depth must lie in [0, 1]");
    if (v.satellite && !(v.satellite->radius > 0.0)) throw SpecError("satellite radius must be positive");
  }

  // Worst-case breathing excursion over the whole session.
  const std::size_t total_frames =
      2 * spec.reference_frames + spec.interleaved_sequences * (2 * spec.navigators_per_sequence - 1);
  const double session_min = total_frames * spec.frame_period_ms / 60000.0;
  double max_scale = 1.0, max_offset = 0.0;
  for (const auto& p : spec.perturbations) {
    max_scale = std::max(max_scale, std::abs(p.amplitude_scale));
    max_offset = std::max(max_offset, std::abs(p.offset_px));
  }
  const double excursion = spec.signal.amplitude_px * max_scale + max_offset +
                           std::abs(spec.signal.drift_px_per_min) * session_min;
  for (std::size_t i = 0; i < spec.vessels.size(); ++i) {
    const auto& v = spec.vessels[i];
    const auto inside = [&](Point2 c, double sigma) {
      const double reach = 3.0 * sigma;
      for (double sgn : {-1.0, 1.0}) {
        const Point2 p{c.x + sgn * excursion * v.motion.x, c.y + sgn * excursion * v.motion.y};
        if (p.x - reach < 0.0 || p.y - reach < 0.0 || p.x + reach > spec.width - 1 || p.y + reach > spec.height - 1)
          return false;
      }
      return true;
    };
    if (!inside(v.center, v.radius * (1.0 + 0.5 * v.modulation_depth)))
      throw SpecError("vessel " + std::to_string(i) + " leaves the frame for some breathing values");
    if (v.satellite && !inside(v.center + v.satellite->offset, v.satellite->radius))
      throw SpecError("satellite of vessel " + std::to_string(i) + " leaves the frame for some breathing values");
  }
}

// Two dissimilar vessels whose contrast and width change with breathing, each with
// a satellite structure, plus Gaussian noise. Frame-0 templates of one
// vessel resemble the other vessel at some breathing states, which is where
// fixed-template whole-frame tracking goes wrong.
inline PhantomSpec modulated_phantom_spec(double noise_std = 8.0, double modulation_depth = 0.6) {
  PhantomSpec spec;
  spec.noise_std = noise_std;
  VesselSpec a;
  a.center = {22.0, 24.0};
  a.motion = {0.3, 1.0};
  a.radius = 2.5;
  a.peak = 800.0;
  a.modulation_depth = modulation_depth;
  a.satellite = SatelliteSpec{{5.0, 0.0}, 2.5, 700.0};
  VesselSpec b;
  b.center = {42.0, 38.0};
  b.motion = {-0.2, 0.8};
  b.radius = 3.0;
  b.peak = 700.0;
  b.modulation_depth = modulation_depth;
  b.satellite = SatelliteSpec{{0.0, 5.0}, 2.0, 700.0};
  spec.vessels = {a, b};
  return spec;
}

class PhantomGenerator {
 public:
  PhantomGenerator(PhantomSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) { validate(spec_); }

  Phantom generate() const {
    Phantom out;
    Dataset& ds = out.dataset;
    ds.in_plane_spacing_mm = spec_.in_plane_spacing_mm;
    ds.slice_gap_mm = spec_.slice_gap_mm;

    const auto plans = plan_sequences();
    ReferenceSequence* refs[2] = {&ds.reference_1, &ds.reference_2};
    SequenceTruth* ref_truth[2] = {&out.truth.reference_1, &out.truth.reference_2};
    std::vector<double> replay_values;
    int ref_seen = 0;
    for (const auto& plan : plans) {
      ds.acquisition_order.push_back(plan.name);
      if (!plan.interleaved) {
        ReferenceSequence& ref = *refs[ref_seen];
        SequenceTruth& truth = *ref_truth[ref_seen];
        ref.name = plan.name;
        ref.frame_period_ms = spec_.frame_period_ms;
        truth.name = plan.name;
        for (std::size_t f = 0; f < spec_.reference_frames; ++f) {
          const double t = f * spec_.frame_period_ms;
          const double value = breathing_value(plan, t);
          if (ref_seen == 0) replay_values.push_back(value);
          ref.frames.push_back(render_navigator(plan, f, t, value));
          truth.navigators.push_back({static_cast<int>(f), value, vessel_centres(value)});
        }
        ++ref_seen;
        continue;
      }
      InterleavedSequence seq;
      seq.name = plan.name;
      seq.data_slice_position_mm = plan.data_position_mm;
      seq.sequence_index = plan.slice_index;
      SequenceTruth truth;
      truth.name = plan.name;
      const std::size_t frames = 2 * spec_.navigators_per_sequence - 1;
      for (std::size_t f = 0; f < frames; ++f) {
        const double t = f * spec_.frame_period_ms;
        const double value = spec_.replay_reference ? replay_values[f % replay_values.size()]
                                                    : breathing_value(plan, t);
        if (f % 2 == 0) {
          seq.frames.push_back(render_navigator(plan, f, t, value));
          truth.navigators.push_back({static_cast<int>(f), value, vessel_centres(value)});
        } else {
          seq.frames.push_back(render_data(plan, f, t, value));
        }
      }
      ds.interleaved.push_back(std::move(seq));
      out.truth.interleaved.push_back(std::move(truth));
    }
    validate_dataset(ds);
    return out;
  }

  // ROI of each vessel centred on its true position in frame 0 of the reference.
  RoiSpec rois(const GroundTruth& truth, int reference) const {
    const auto& first = truth.reference(reference).navigators.front();
    RoiSpec spec;
    const int h = spec_.roi_half_size;
    for (std::size_t v = 0; v < spec_.vessels.size(); ++v) {
      const int cx = static_cast<int>(std::lround(first.vessels[v].x));
      const int cy = static_cast<int>(std::lround(first.vessels[v].y));
      const int size = 2 * h + 1;
      const int x = std::clamp(cx - h, 0, spec_.width - size);
      const int y = std::clamp(cy - h, 0, spec_.height - size);
      spec.rois.push_back({"vessel" + std::to_string(v), {x, y, size, size}});
    }
    return spec;
  }

  const PhantomSpec& spec() const { return spec_; }

 private:
  static void validate_dataset(const Dataset& ds) { navsort::validate(ds); }

  std::vector<detail::SequencePlan> plan_sequences() const {
    std::vector<detail::SequencePlan> plans;
    const auto phases_for = [&](std::uint64_t id) {
      std::mt19937_64 rng(detail::mix(spec_.signal.variability_seed, id, 0x5eed));
      std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
      std::vector<double> ph;
      for (std::size_t k = 0; k < spec_.signal.components.size(); ++k) ph.push_back(u(rng));
      return ph;
    };
    double clock = 0.0;
    const auto add = [&](std::string name, std::uint64_t id, std::size_t frames, bool interleaved, int slice) {
      detail::SequencePlan p;
      p.name = std::move(name);
      p.stream = id;
      p.phases = phases_for(id);
      p.start_ms = clock;
      p.interleaved = interleaved;
      p.slice_index = slice;
      if (interleaved) {
        p.data_position_mm = spec_.first_slice_mm + slice * spec_.slice_gap_mm;
        if (static_cast<std::size_t>(slice) < spec_.perturbations.size()) p.perturbation = spec_.perturbations[slice];
      }
      clock += frames * spec_.frame_period_ms;
      plans.push_back(std::move(p));
    };
    add("ref1", 1, spec_.reference_frames, false, -1);
    for (std::size_t s = 0; s < spec_.interleaved_sequences; ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "seq%03zu", s);
      add(name, 100 + s, 2 * spec_.navigators_per_sequence - 1, true, static_cast<int>(s));
    }
    add("ref2", 2, spec_.reference_frames, false, -1);
    return plans;
  }

  double breathing_value(const detail::SequencePlan& plan, double t_ms) const {
    const double session_ms = plan.start_ms + t_ms;
    return plan.perturbation.amplitude_scale * spec_.signal.periodic(session_ms, plan.phases) +
           plan.perturbation.offset_px + spec_.signal.drift_px_per_min * session_ms / 60000.0;
  }

  double inhalation(double value) const {
    if (!(spec_.signal.amplitude_px > 0.0)) return 0.0;
    return std::clamp(0.5 * (value / spec_.signal.amplitude_px + 1.0), 0.0, 1.0);
  }

  std::vector<Point2> vessel_centres(double value) const {
    std::vector<Point2> out;
    for (const auto& v : spec_.vessels) out.push_back({v.center.x + value * v.motion.x, v.center.y + value * v.motion.y});
    return out;
  }

  std::vector<double> noise_field(const detail::SequencePlan& plan, std::size_t frame) const {
    std::vector<double> noise(static_cast<std::size_t>(spec_.width) * static_cast<std::size_t>(spec_.height), 0.0);
    if (spec_.noise_std > 0.0) {
      std::mt19937_64 rng(detail::mix(seed_, plan.stream, frame));
      std::normal_distribution<double> n(0.0, spec_.noise_std);
      for (double& x : noise) x = n(rng);
    }
    return noise;
  }

  Frame make_frame(FrameKind kind, double t, double position, const std::vector<double>& intensity) const {
    Frame f;
    f.width = spec_.width;
    f.height = spec_.height;
    f.kind = kind;
    f.timestamp_ms = t;
    f.slice_position_mm = position;
    f.pixels.resize(intensity.size());
    for (std::size_t i = 0; i < intensity.size(); ++i) f.pixels[i] = to_u16(intensity[i]);
    return f;
  }

  Frame render_navigator(const detail::SequencePlan& plan, std::size_t frame, double t, double value) const {
    auto img = noise_field(plan, frame);
    const double u = inhalation(value);
    const auto centres = vessel_centres(value);
    for (int y = 0; y < spec_.height; ++y)
      for (int x = 0; x < spec_.width; ++x) {
        double v = spec_.background;
        for (std::size_t i = 0; i < spec_.vessels.size(); ++i) {
          const VesselSpec& vs = spec_.vessels[i];
          const double contrast = 1.0 - vs.modulation_depth * u;
          const double sigma = vs.radius * (1.0 + 0.5 * vs.modulation_depth * u);
          v += vs.peak * contrast * detail::gaussian(x - centres[i].x, y - centres[i].y, sigma);
          if (vs.satellite) {
            const Point2 c = centres[i] + vs.satellite->offset;
            v += vs.satellite->peak * vs.modulation_depth * u * detail::gaussian(x - c.x, y - c.y, vs.satellite->radius);
          }
        }
        img[static_cast<std::size_t>(y) * spec_.width + x] += v;
      }
    return make_frame(FrameKind::navigator, t, spec_.navigator_position_mm, img);
  }

  // Organ cross-section whose size depends on the slice and whose position follows breathing.
  Frame render_data(const detail::SequencePlan& plan, std::size_t frame, double t, double value) const {
    auto img = noise_field(plan, frame);
    const double n = static_cast<double>(std::max<std::size_t>(spec_.interleaved_sequences, 2) - 1);
    const double z = plan.slice_index / n - 0.5;
    const double organ_r = 0.3 * std::min(spec_.width, spec_.height) * std::sqrt(std::max(0.05, 1.0 - 2.0 * z * z));
    const Point2 c{0.5 * spec_.width, 0.5 * spec_.height + value};
    const Point2 lesion{c.x + 0.4 * organ_r * std::cos(6.0 * z), c.y + 0.4 * organ_r * std::sin(6.0 * z)};
    for (int y = 0; y < spec_.height; ++y)
      for (int x = 0; x < spec_.width; ++x) {
        const double d = std::hypot(x - c.x, y - c.y);
        double v = spec_.background;
        v += spec_.organ_intensity / (1.0 + std::exp((d - organ_r) / 1.5));
        v += 0.5 * spec_.organ_intensity * detail::gaussian(x - lesion.x, y - lesion.y, 2.0);
        img[static_cast<std::size_t>(y) * spec_.width + x] += v;
      }
    return make_frame(FrameKind::data, t, plan.data_position_mm, img);
  }

  PhantomSpec spec_;
  std::uint64_t seed_;
};

inline Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  return PhantomGenerator(spec, seed).generate();
}

// Matching criterion evaluated directly on true vessel positions, no image data.
// Same ordering as evaluate_decisions: time point, sequence, data frame.
inline std::vector<MatchDecision> oracle_matches(const GroundTruth& truth, int reference, double threshold,
                                                 Aggregation aggregation = Aggregation::sum) {
  const SequenceTruth& ref = truth.reference(reference);
  std::vector<MatchDecision> out;
  const std::size_t frames = ref.navigators.size();
  for (std::size_t i = 1; i + 1 < frames; ++i)
    for (std::size_t s = 0; s < truth.interleaved.size(); ++s) {
      const auto& navs = truth.interleaved[s].navigators;
      for (std::size_t k = 0; k + 1 < navs.size(); ++k) {
        MatchDecision d;
        d.reference_timepoint = static_cast<int>(i);
        d.sequence_index = static_cast<int>(s);
        d.data_frame_index = static_cast<int>(2 * k + 1);
        d.threshold = threshold;
        const auto& before_ref = ref.navigators[i - 1].vessels;
        const auto& after_ref = ref.navigators[i + 1].vessels;
        const auto& before_nav = navs[k].vessels;
        const auto& after_nav = navs[k + 1].vessels;
        for (std::size_t v = 0; v < before_ref.size(); ++v) {
          const double a = std::sqrt((before_ref[v].x - before_nav[v].x) * (before_ref[v].x - before_nav[v].x) +
                                     (before_ref[v].y - before_nav[v].y) * (before_ref[v].y - before_nav[v].y));
          const double b = std::sqrt((after_ref[v].x - after_nav[v].x) * (after_ref[v].x - after_nav[v].x) +
                                     (after_ref[v].y - after_nav[v].y) * (after_ref[v].y - after_nav[v].y));
          d.summary.preceding.push_back(a);
          d.summary.following.push_back(b);
          d.summary.total += a + b;
        }
        const double terms = 2.0 * static_cast<double>(before_ref.size());
        d.aggregate = aggregation == Aggregation::sum ? d.summary.total : d.summary.total / terms;
        d.accepted = d.aggregate < threshold;
        out.push_back(std::move(d));
      }
    }
  return out;
}

// ---- phantom.json ----

inline PhantomSpec parse_phantom_spec(const nlohmann::json& j) {
  PhantomSpec s;
  try {
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.reference_frames = j.value("reference_frames", s.reference_frames);
    s.interleaved_sequences = j.value("interleaved_sequences", s.interleaved_sequences);
    s.navigators_per_sequence = j.value("navigators_per_sequence", s.navigators_per_sequence);
    s.frame_period_ms = j.value("frame_period_ms", s.frame_period_ms);
    s.background = j.value("background", s.background);
    s.organ_intensity = j.value("organ_intensity", s.organ_intensity);
    s.noise_std = j.value("noise_std", s.noise_std);
    if (j.contains("in_plane_spacing_mm")) {
      const auto sp = j.at("in_plane_spacing_mm").get<std::vector<double>>();
      if (sp.size() != 2) throw SpecError("in_plane_spacing_mm needs two entries");
      s.in_plane_spacing_mm = {sp[0], sp[1]};
    }
    s.slice_gap_mm = j.value("slice_gap_mm", s.slice_gap_mm);
    s.navigator_position_mm = j.value("navigator_position_mm", s.navigator_position_mm);
    s.first_slice_mm = j.value("first_slice_mm", s.first_slice_mm);
    s.replay_reference = j.value("replay_reference", s.replay_reference);
    s.roi_half_size = j.value("roi_half_size", s.roi_half_size);
    if (j.contains("signal")) {
      const auto& g = j.at("signal");
      s.signal.amplitude_px = g.value("amplitude_px", s.signal.amplitude_px);
      s.signal.drift_px_per_min = g.value("drift_px_per_min", s.signal.drift_px_per_min);
      s.signal.variability_seed = g.value("variability_seed", s.signal.variability_seed);
      if (g.contains("components")) {
        s.signal.components.clear();
        for (const auto& c : g.at("components"))
          s.signal.components.push_back({c.at("period_ms").get<double>(), c.at("weight").get<double>()});
      }
    }
    if (j.contains("vessels")) {
      s.vessels.clear();
      for (const auto& v : j.at("vessels")) {
        VesselSpec vs;
        vs.center = {v.at("x").get<double>(), v.at("y").get<double>()};
        if (v.contains("motion")) {
          const auto m = v.at("motion").get<std::vector<double>>();
          if (m.size() != 2) throw SpecError("vessel motion needs two entries");
          vs.motion = {m[0], m[1]};
        }
        vs.radius = v.value("radius", vs.radius);
        vs.peak = v.value("peak", vs.peak);
        vs.modulation_depth = v.value("modulation_depth", vs.modulation_depth);
        if (v.contains("satellite")) {
          const auto& sat = v.at("satellite");
          SatelliteSpec ss;
          ss.offset = {sat.value("dx", ss.offset.x), sat.value("dy", ss.offset.y)};
          ss.radius = sat.value("radius", ss.radius);
          ss.peak = sat.value("peak", ss.peak);
          vs.satellite = ss;
        }
        s.vessels.push_back(vs);
      }
    }
    if (j.contains("perturbations"))
      for (const auto& p : j.at("perturbations"))
        s.perturbations.push_back({p.value("offset_px", 0.0), p.value("amplitude_scale", 1.0)});
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed phantom spec: ") + e.what());
  }
  return s;
}

inline nlohmann::json to_json(const PhantomSpec& s) {
  nlohmann::json j;
  j["width"] = s.width;
  j["height"] = s.height;
  j["reference_frames"] = s.reference_frames;
  j["interleaved_sequences"] = s.interleaved_sequences;
  j["navigators_per_sequence"] = s.navigators_per_sequence;
  j["frame_period_ms"] = s.frame_period_ms;
  j["background"] = s.background;
  j["organ_intensity"] = s.organ_intensity;
  j["noise_std"] = s.noise_std;
  j["in_plane_spacing_mm"] = {s.in_plane_spacing_mm.x, s.in_plane_spacing_mm.y};
  j["slice_gap_mm"] = s.slice_gap_mm;
  j["navigator_position_mm"] = s.navigator_position_mm;
  j["first_slice_mm"] = s.first_slice_mm;
  j["replay_reference"] = s.replay_reference;
  j["roi_half_size"] = s.roi_half_size;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : s.signal.components) comps.push_back({{"period_ms", c.period_ms}, {"weight", c.weight}});
  j["signal"] = {{"amplitude_px", s.signal.amplitude_px},
                 {"drift_px_per_min", s.signal.drift_px_per_min},
                 {"variability_seed", s.signal.variability_seed},
                 {"components", comps}};
  nlohmann::json vessels = nlohmann::json::array();
  for (const auto& v : s.vessels) {
    nlohmann::json e = {{"x", v.center.x},   {"y", v.center.y},         {"motion", {v.motion.x, v.motion.y}},
                        {"radius", v.radius}, {"peak", v.peak}, {"modulation_depth", v.modulation_depth}};
    if (v.satellite)
      e["satellite"] = {{"dx", v.satellite->offset.x},
                        {"dy", v.satellite->offset.y},
                        {"radius", v.satellite->radius},
                        {"peak", v.satellite->peak}};
    vessels.push_back(e);
  }
  j["vessels"] = vessels;
  nlohmann::json perturb = nlohmann::json::array();
  for (const auto& p : s.perturbations) perturb.push_back({{"offset_px", p.offset_px}, {"amplitude_scale", p.amplitude_scale}});
  j["perturbations"] = perturb;
  return j;
}

inline PhantomSpec load_phantom_spec(const std::filesystem::path& path) {
  try {
    return parse_phantom_spec(read_json(path));
  } catch (const ValidationError& e) {
    throw SpecError(e.what());
  }
}

// CSV: sequence,frame,state,vessel,x,y (navigator frames only)
inline std::string ground_truth_csv(const GroundTruth& truth) {
  std::ostringstream out;
  out.precision(17);
  out << "sequence,frame,state,vessel,x,y\n";
  const auto emit = [&](const SequenceTruth& s) {
    for (const auto& f : s.navigators)
      for (std::size_t v = 0; v < f.vessels.size(); ++v)
        out << s.name << ',' << f.frame << ',' << f.state << ',' << v << ',' << f.vessels[v].x << ','
            << f.vessels[v].y << '\n';
  };
  emit(truth.reference_1);
  for (const auto& s : truth.interleaved) emit(s);
  emit(truth.reference_2);
  return out.str();
}

// Dataset directory plus ground_truth.csv, rois.json (reference 1) and rois_ref2.json.
inline void write_phantom(const PhantomGenerator& gen, const Phantom& phantom, const std::filesystem::path& dir) {
  write_dataset(phantom.dataset, dir);
  write_text(dir / "ground_truth.csv", ground_truth_csv(phantom.truth));
  write_text(dir / "rois.json", to_json(gen.rois(phantom.truth, 1)).dump(2) + "\n");
  write_text(dir / "rois_ref2.json", to_json(gen.rois(phantom.truth, 2)).dump(2) + "\n");
}

}  // namespace navsort

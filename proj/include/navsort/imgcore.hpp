#pragma once

// Core image, sequence and dataset types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "navsort/errors.hpp"

namespace navsort {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }

// Integer pixel rectangle, top-left corner plus extent.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

// Row-major 2D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

enum class FrameKind { navigator, data };

inline const char* to_string(FrameKind kind) { return kind == FrameKind::navigator ? "navigator" : "data"; }

// One 2D grayscale slice with acquisition metadata.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;  // row-major
  FrameKind kind = FrameKind::navigator;
  double timestamp_ms = 0.0;
  double slice_position_mm = 0.0;

  std::uint16_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }

  bool same_shape(const Frame& other) const { return width == other.width && height == other.height; }

  // Throws ValidationError when the pixel buffer does not match the extent.
  void check() const {
    if (width <= 0 || height <= 0) throw ValidationError("frame has non-positive dimensions");
    if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw ValidationError("frame pixel count " + std::to_string(pixels.size()) + " != " + std::to_string(width) +
                            "x" + std::to_string(height));
  }
};

// Navigator-only sequence that drives the temporal reconstruction.
struct ReferenceSequence {
  std::string name;
  std::vector<Frame> frames;
  double frame_period_ms = 0.0;

  std::size_t size() const { return frames.size(); }
};

// Alternating navigator/data acquisition at one data-slice position.
struct InterleavedSequence {
  std::string name;
  std::vector<Frame> frames;
  double data_slice_position_mm = 0.0;
  int sequence_index = 0;  // acquisition ordinal among interleaved sequences

  std::size_t size() const { return frames.size(); }
  std::size_t navigator_count() const { return (frames.size() + 1) / 2; }
  std::size_t data_count() const { return frames.size() / 2; }

  // Frame ordinal of the k-th navigator / data frame.
  static std::size_t navigator_ordinal(std::size_t k) { return 2 * k; }
  static std::size_t data_ordinal(std::size_t k) { return 2 * k + 1; }
};

struct Dataset {
  ReferenceSequence reference_1;
  ReferenceSequence reference_2;
  std::vector<InterleavedSequence> interleaved;  // acquisition order
  Point2 in_plane_spacing_mm{1.0, 1.0};
  double slice_gap_mm = 4.0;
  // Directory names in acquisition order, references included.
  std::vector<std::string> acquisition_order;

  const ReferenceSequence& reference(int which) const {
    if (which == 1) return reference_1;
    if (which == 2) return reference_2;
    throw UsageError("reference must be 1 or 2, got " + std::to_string(which));
  }

  int frame_width() const { return reference_1.frames.empty() ? 0 : reference_1.frames.front().width; }
  int frame_height() const { return reference_1.frames.empty() ? 0 : reference_1.frames.front().height; }

  // Interleaved sequence indices sorted by ascending data slice position.
  std::vector<std::size_t> slice_order() const {
    std::vector<std::size_t> order(interleaved.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return interleaved[a].data_slice_position_mm < interleaved[b].data_slice_position_mm;
    });
    return order;
  }
};

// Navigators immediately before and after the data frame at `data_index`.
inline std::pair<const Frame&, const Frame&> enclosing_navigators(const InterleavedSequence& seq,
                                                                  std::size_t data_index) {
  if (data_index >= seq.frames.size())
    throw UsageError("frame ordinal " + std::to_string(data_index) + " out of range for sequence '" + seq.name + "'");
  if (seq.frames[data_index].kind != FrameKind::data || data_index == 0 || data_index + 1 >= seq.frames.size())
    throw UsageError("frame ordinal " + std::to_string(data_index) + " of sequence '" + seq.name +
                     "' is not an enclosed data frame");
  return {seq.frames[data_index - 1], seq.frames[data_index + 1]};
}

namespace detail {

inline void check_frame_shape(const Frame& frame, int width, int height, const std::string& where) {
  try {
    frame.check();
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  if (frame.width != width || frame.height != height)
    throw ValidationError(where + ": frame is " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                          ", expected " + std::to_string(width) + "x" + std::to_string(height));
}

inline void check_timestamps(std::span<const Frame> frames, const std::string& name) {
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (!(frames[i].timestamp_ms > frames[i - 1].timestamp_ms))
      throw ValidationError("sequence '" + name + "' frame " + std::to_string(i) + ": timestamps not strictly increasing");
}

}  // namespace detail

inline void validate(const ReferenceSequence& ref, int width, int height) {
  if (ref.frames.empty()) throw ValidationError("reference sequence '" + ref.name + "' is empty");
  const double position = ref.frames.front().slice_position_mm;
  for (std::size_t i = 0; i < ref.frames.size(); ++i) {
    const Frame& f = ref.frames[i];
    const std::string where = "sequence '" + ref.name + "' frame " + std::to_string(i);
    detail::check_frame_shape(f, width, height, where);
    if (f.kind != FrameKind::navigator) throw ValidationError(where + ": reference frames must be navigators");
    if (f.slice_position_mm != position) throw ValidationError(where + ": slice position differs from frame 0");
  }
  detail::check_timestamps(ref.frames, ref.name);
}

inline void validate(const InterleavedSequence& seq, int width, int height, double navigator_position_mm) {
  if (seq.frames.size() < 3 || seq.frames.size() % 2 == 0)
    throw ValidationError("sequence '" + seq.name + "' must hold an odd number (>= 3) of frames, got " +
                          std::to_string(seq.frames.size()));
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const Frame& f = seq.frames[i];
    const std::string where = "sequence '" + seq.name + "' frame " + std::to_string(i);
    detail::check_frame_shape(f, width, height, where);
    const FrameKind expected = i % 2 == 0 ? FrameKind::navigator : FrameKind::data;
    if (f.kind != expected)
      throw ValidationError(where + ": alternation violated, expected " + to_string(expected) + " got " +
                            to_string(f.kind));
    if (expected == FrameKind::navigator && f.slice_position_mm != navigator_position_mm)
      throw ValidationError(where + ": navigator slice position differs from the reference navigator position");
    if (expected == FrameKind::data && f.slice_position_mm != seq.data_slice_position_mm)
      throw ValidationError(where + ": data slice position differs from the sequence data position");
  }
  detail::check_timestamps(seq.frames, seq.name);
}

// Checks every dataset invariant; throws ValidationError on the first violation.
inline void validate(const Dataset& ds) {
  const int width = ds.frame_width();
  const int height = ds.frame_height();
  validate(ds.reference_1, width, height);
  validate(ds.reference_2, width, height);
  const double nav_position = ds.reference_1.frames.front().slice_position_mm;
  if (ds.reference_2.frames.front().slice_position_mm != nav_position)
    throw ValidationError("reference sequences image different navigator positions");
  if (ds.interleaved.empty()) throw ValidationError("dataset has no interleaved sequences");
  for (const auto& seq : ds.interleaved) validate(seq, width, height, nav_position);
  if (!(ds.slice_gap_mm > 0.0)) throw ValidationError("slice gap must be positive");

  const auto order = ds.slice_order();
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& lo = ds.interleaved[order[k - 1]];
    const auto& hi = ds.interleaved[order[k]];
    const double step = hi.data_slice_position_mm - lo.data_slice_position_mm;
    if (step == 0.0)
      throw ValidationError("sequences '" + lo.name + "' and '" + hi.name + "' share a data slice position");
    if (std::abs(step - ds.slice_gap_mm) > 1e-6)
      throw ValidationError("data slice positions of '" + lo.name + "' and '" + hi.name + "' are " +
                            std::to_string(step) + " mm apart, slice gap is " + std::to_string(ds.slice_gap_mm));
  }
}

}  // namespace navsort

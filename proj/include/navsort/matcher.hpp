#pragma once

// Normalized template matching (TM_CCOEFF_NORMED / TM_CCORR_NORMED semantics),
// argmax search and per-axis parabolic subpixel refinement.
//
// All scores are evaluated directly in the spatial domain. Patch sums are taken
// from exact integer summed-area tables, so the score of a placement does not
// depend on which window of placements was requested.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "navsort/imgcore.hpp"

namespace navsort {

enum class Measure { ccoeff_normed, ccorr_normed };

inline const char* to_string(Measure m) { return m == Measure::ccoeff_normed ? "ccoeff" : "ccorr"; }

inline Measure parse_measure(const std::string& s) {
  if (s == "ccoeff" || s == "ccoeff_normed" || s == "TM_CCOEFF_NORMED") return Measure::ccoeff_normed;
  if (s == "ccorr" || s == "ccorr_normed" || s == "TM_CCORR_NORMED") return Measure::ccorr_normed;
  throw UsageError("unknown similarity measure '" + s + "'");
}

// Rectangular patch of double intensities cut from a frame.
class Template {
 public:
  Template(int width, int height, std::vector<double> pixels, Point2 anchor)
      : width_(width), height_(height), pixels_(std::move(pixels)), anchor_(anchor) {
    if (width_ <= 0 || height_ <= 0) throw UsageError("template dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
      throw UsageError("template pixel count does not match its dimensions");
    const double n = static_cast<double>(pixels_.size());
    double sum = 0.0;
    for (double v : pixels_) sum += v;
    mean_ = sum / n;
    centered_.resize(pixels_.size());
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
      centered_[i] = pixels_[i] - mean_;
      centered_energy_ += centered_[i] * centered_[i];
      energy_ += pixels_[i] * pixels_[i];
    }
    variance_ = centered_energy_ / n;
  }

  // Exact integer cut of `rect` from `frame`.
  static Template cut(const Frame& frame, Rect rect) {
    if (rect.w <= 0 || rect.h <= 0 || rect.x < 0 || rect.y < 0 || rect.x + rect.w > frame.width ||
        rect.y + rect.h > frame.height)
      throw UsageError("template rect does not fit the frame");
    std::vector<double> px;
    px.reserve(static_cast<std::size_t>(rect.w) * static_cast<std::size_t>(rect.h));
    for (int y = rect.y; y < rect.y + rect.h; ++y)
      for (int x = rect.x; x < rect.x + rect.w; ++x) px.push_back(frame.at(x, y));
    return Template(rect.w, rect.h, std::move(px), {static_cast<double>(rect.x), static_cast<double>(rect.y)});
  }

  // Bilinear cut with its top-left corner at a floating-point position.
  // Integer positions reproduce the integer cut exactly.
  static Template cut(const Frame& frame, Point2 pos, int width, int height) {
    const double max_x = frame.width - width;
    const double max_y = frame.height - height;
    if (width <= 0 || height <= 0 || max_x < 0 || max_y < 0) throw UsageError("template does not fit the frame");
    if (!(pos.x >= 0.0 && pos.x <= max_x && pos.y >= 0.0 && pos.y <= max_y))
      throw UsageError("template position (" + std::to_string(pos.x) + ", " + std::to_string(pos.y) +
                       ") outside the placement domain");
    const int x0 = static_cast<int>(std::floor(pos.x));
    const int y0 = static_cast<int>(std::floor(pos.y));
    const double fx = pos.x - x0;
    const double fy = pos.y - y0;
    const double w00 = (1.0 - fx) * (1.0 - fy);
    const double w10 = fx * (1.0 - fy);
    const double w01 = (1.0 - fx) * fy;
    const double w11 = fx * fy;
    std::vector<double> px;
    px.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int j = 0; j < height; ++j) {
      const int ya = y0 + j;
      const int yb = std::min(ya + 1, frame.height - 1);
      for (int i = 0; i < width; ++i) {
        const int xa = x0 + i;
        const int xb = std::min(xa + 1, frame.width - 1);
        px.push_back(w00 * frame.at(xa, ya) + w10 * frame.at(xb, ya) + w01 * frame.at(xa, yb) +
                     w11 * frame.at(xb, yb));
      }
    }
    return Template(width, height, std::move(px), pos);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  Point2 anchor() const { return anchor_; }
  std::span<const double> pixels() const { return pixels_; }
  std::span<const double> centered() const { return centered_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }
  double centered_energy() const { return centered_energy_; }
  double energy() const { return energy_; }

  // Zero variance up to rounding of the mean subtraction.
  bool degenerate() const { return !(variance_ > 1e-18 * std::max(1.0, mean_ * mean_)); }

 private:
  int width_;
  int height_;
  std::vector<double> pixels_;
  std::vector<double> centered_;
  Point2 anchor_;
  double mean_ = 0.0;
  double variance_ = 0.0;
  double centered_energy_ = 0.0;
  double energy_ = 0.0;
};

// Square neighbourhood of placements around a (top-left) position.
struct SearchRegion {
  Point2 center;
  int radius = 10;
};

struct MatchResult {
  Point2 position;  // subpixel top-left of the best placement
  double score = 0.0;
  bool widened = false;
};

// Inclusive window of template placements.
struct PlacementWindow {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  friend bool operator==(const PlacementWindow&, const PlacementWindow&) = default;
};

// Scores for a window of placements; entry (i, j) is placement (origin_x + i, origin_y + j).
struct ResponseMap {
  int origin_x = 0;
  int origin_y = 0;
  Grid<double> scores;

  double at_placement(int x, int y) const { return scores(x - origin_x, y - origin_y); }
  PlacementWindow window() const {
    return {origin_x, origin_y, origin_x + scores.width() - 1, origin_y + scores.height() - 1};
  }
};

// All valid placements of `tpl` inside `image`.
inline PlacementWindow placement_domain(const Frame& image, const Template& tpl) {
  if (tpl.width() > image.width || tpl.height() > image.height)
    throw UsageError("template " + std::to_string(tpl.width()) + "x" + std::to_string(tpl.height()) +
                     " does not fit image " + std::to_string(image.width) + "x" + std::to_string(image.height));
  return {0, 0, image.width - tpl.width(), image.height - tpl.height()};
}

// Region clamped to the placement domain; never empty.
inline PlacementWindow region_window(const PlacementWindow& domain, const SearchRegion& region) {
  if (region.radius < 1) throw UsageError("search radius must be >= 1");
  const auto clamp_center = [](double c, int lo, int hi) {
    const double r = std::floor(c + 0.5);
    if (!(r >= lo)) return lo;  // also catches NaN
    if (r > hi) return hi;
    return static_cast<int>(r);
  };
  const int cx = clamp_center(region.center.x, domain.x0, domain.x1);
  const int cy = clamp_center(region.center.y, domain.y0, domain.y1);
  return {std::max(domain.x0, cx - region.radius), std::max(domain.y0, cy - region.radius),
          std::min(domain.x1, cx + region.radius), std::min(domain.y1, cy + region.radius)};
}

namespace detail {

inline double dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void require_usable(const Template& tpl, Measure measure) {
  if (measure == Measure::ccoeff_normed && tpl.degenerate())
    throw DegenerateTemplateError("template has zero variance; normalized correlation coefficient is undefined");
  if (measure == Measure::ccorr_normed && !(tpl.energy() > 0.0))
    throw DegenerateTemplateError("template has zero energy; normalized cross-correlation is undefined");
}

}  // namespace detail

// Scores every placement in `win`. Zero-energy image patches score 0.
inline ResponseMap response_window(const Frame& image, const Template& tpl, Measure measure,
                                   const PlacementWindow& win) {
  detail::require_usable(tpl, measure);
  const int tw = tpl.width();
  const int th = tpl.height();
  const int sub_w = win.width() + tw - 1;
  const int sub_h = win.height() + th - 1;

  std::vector<double> patch(static_cast<std::size_t>(sub_w) * static_cast<std::size_t>(sub_h));
  // Summed-area tables with a zero guard row/column; exact in 64-bit integers.
  const int iw = sub_w + 1;
  std::vector<std::int64_t> sum(static_cast<std::size_t>(iw) * static_cast<std::size_t>(sub_h + 1), 0);
  std::vector<std::int64_t> sum_sq(sum.size(), 0);
  for (int y = 0; y < sub_h; ++y) {
    std::int64_t row = 0;
    std::int64_t row_sq = 0;
    for (int x = 0; x < sub_w; ++x) {
      const std::int64_t v = image.at(win.x0 + x, win.y0 + y);
      patch[static_cast<std::size_t>(y) * sub_w + x] = static_cast<double>(v);
      row += v;
      row_sq += v * v;
      const std::size_t at = static_cast<std::size_t>(y + 1) * iw + (x + 1);
      sum[at] = sum[at - iw] + row;
      sum_sq[at] = sum_sq[at - iw] + row_sq;
    }
  }
  const auto box = [&](const std::vector<std::int64_t>& t, int x, int y) {
    const std::size_t a = static_cast<std::size_t>(y) * iw + x;
    const std::size_t b = static_cast<std::size_t>(y + th) * iw + x;
    return t[b + tw] - t[b] - t[a + tw] + t[a];
  };

  const bool coeff = measure == Measure::ccoeff_normed;
  const std::span<const double> kernel = coeff ? tpl.centered() : tpl.pixels();
  const double tpl_energy = coeff ? tpl.centered_energy() : tpl.energy();
  const std::int64_t n = static_cast<std::int64_t>(tw) * th;

  ResponseMap out{win.x0, win.y0, Grid<double>(win.width(), win.height(), 0.0)};
  for (int py = 0; py < win.height(); ++py) {
    for (int px = 0; px < win.width(); ++px) {
      double denom_sq = 0.0;
      if (coeff) {
        const __int128 s = box(sum, px, py);
        const __int128 s2 = box(sum_sq, px, py);
        const __int128 spread = static_cast<__int128>(n) * s2 - s * s;  // n * sum (I - mean)^2
        if (spread <= 0) continue;
        denom_sq = tpl_energy * (static_cast<double>(spread) / static_cast<double>(n));
      } else {
        const std::int64_t s2 = box(sum_sq, px, py);
        if (s2 <= 0) continue;
        denom_sq = tpl_energy * static_cast<double>(s2);
      }
      double num = 0.0;
      for (int ty = 0; ty < th; ++ty)
        num += detail::dot(kernel.data() + static_cast<std::size_t>(ty) * tw,
                           patch.data() + static_cast<std::size_t>(py + ty) * sub_w + px, tw);
      out.scores(px, py) = num / std::sqrt(denom_sq);
    }
  }
  return out;
}

// Response over the whole placement domain, or over `region` when given.
inline ResponseMap response_map(const Frame& image, const Template& tpl, Measure measure,
                                const std::optional<SearchRegion>& region = std::nullopt) {
  const PlacementWindow domain = placement_domain(image, tpl);
  return response_window(image, tpl, measure, region ? region_window(domain, *region) : domain);
}

// Argmax (ties: smallest row-major index) restricted to `argmax_window` when given,
// refined per axis by a parabola through the peak and its two neighbours.
inline MatchResult find_peak_subpixel(const ResponseMap& response,
                                      const std::optional<PlacementWindow>& argmax_window = std::nullopt) {
  const Grid<double>& r = response.scores;
  if (r.empty()) throw UsageError("empty response map");
  int i0 = 0, j0 = 0, i1 = r.width() - 1, j1 = r.height() - 1;
  if (argmax_window) {
    i0 = std::max(i0, argmax_window->x0 - response.origin_x);
    j0 = std::max(j0, argmax_window->y0 - response.origin_y);
    i1 = std::min(i1, argmax_window->x1 - response.origin_x);
    j1 = std::min(j1, argmax_window->y1 - response.origin_y);
    if (i0 > i1 || j0 > j1) throw UsageError("argmax window does not intersect the response map");
  }
  int bi = i0, bj = j0;
  double best = r(i0, j0);
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i)
      if (r(i, j) > best) {
        best = r(i, j);
        bi = i;
        bj = j;
      }

  const auto refine = [](double a, double b, double c) {
    const double curvature = 2.0 * b - a - c;
    if (!(curvature > 0.0)) return 0.0;
    return std::clamp((c - a) / (2.0 * curvature), -0.5, 0.5);
  };
  double dx = 0.0, dy = 0.0;
  if (bi > 0 && bi + 1 < r.width()) dx = refine(r(bi - 1, bj), best, r(bi + 1, bj));
  if (bj > 0 && bj + 1 < r.height()) dy = refine(r(bi, bj - 1), best, r(bi, bj + 1));
  return {{response.origin_x + bi + dx, response.origin_y + bj + dy}, best, false};
}

// Best subpixel placement. With a region, the argmax is restricted to the region
// while refinement may read one placement beyond it. If the regional peak scores
// below `min_score` a single full-domain search is run and flagged as widened.
inline MatchResult match_template(const Frame& image, const Template& tpl, Measure measure,
                                  const std::optional<SearchRegion>& region, double min_score = 0.5) {
  const PlacementWindow domain = placement_domain(image, tpl);
  if (region) {
    const PlacementWindow inner = region_window(domain, *region);
    const PlacementWindow outer{std::max(domain.x0, inner.x0 - 1), std::max(domain.y0, inner.y0 - 1),
                                std::min(domain.x1, inner.x1 + 1), std::min(domain.y1, inner.y1 + 1)};
    const ResponseMap local_map = response_window(image, tpl, measure, outer);
    const MatchResult local = find_peak_subpixel(local_map, inner);
    if (local.score >= min_score) return local;
    MatchResult full = outer == domain ? find_peak_subpixel(local_map)
                                       : find_peak_subpixel(response_window(image, tpl, measure, domain));
    full.widened = true;
    return full;
  }
  return find_peak_subpixel(response_window(image, tpl, measure, domain));
}

}  // namespace navsort

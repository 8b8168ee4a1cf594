// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
// Tolerances and time budgets are pinned below; each criterion reports the
// measured value next to its bound.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "navsort/navsort.hpp"

using namespace navsort;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances ----
constexpr double kSelfMatchTol = 1e-9;
constexpr double kAffineTol = 1e-6;
constexpr double kSubpixelTol = 0.25;      // px
constexpr double kOracleAgreement = 99.0;  // percent of decisions
constexpr double kOracleBand = 0.05;       // px; disagreements must have |oracle aggregate - threshold| <= band
constexpr double kMinSpeedup = 2.0;
constexpr double kSnrTol = 0.20;           // relative deviation from sqrt(N)

// ---- time budgets, seconds ----
constexpr double kBudgetSimilarity = 10.0;
constexpr double kBudgetSubpixel = 30.0;
constexpr double kBudgetDrift = 30.0;
constexpr double kBudgetOrdering = 300.0;  // shared with monotonicity
constexpr double kBudgetOracle = 120.0;
constexpr double kBudgetSpeedup = 300.0;
constexpr double kBudgetSnr = 60.0;
constexpr double kBudgetDeterminism = 300.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double seconds, double budget) {
  const bool in_time = seconds <= budget;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s [%d] %s: %s; %.2f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), seconds, budget, in_time ? "" : " OVER BUDGET");
  std::fflush(stdout);
}

double timed(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Frame random_frame(int w, int h, std::mt19937_64& rng) {
  Frame f;
  f.width = w;
  f.height = h;
  f.pixels.resize(static_cast<std::size_t>(w) * h);
  std::uniform_int_distribution<int> dist(0, 4095);
  for (auto& p : f.pixels) p = static_cast<std::uint16_t>(dist(rng));
  return f;
}

Frame blob_frame(int w, int h, Point2 c, double sigma, double peak, double noise_std, std::mt19937_64& rng) {
  Frame f;
  f.width = w;
  f.height = h;
  f.pixels.resize(static_cast<std::size_t>(w) * h);
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = x - c.x, dy = y - c.y;
      double v = 150.0 + peak * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      if (noise_std > 0.0) v += noise(rng);
      f.pixels[static_cast<std::size_t>(y) * w + x] = to_u16(v);
    }
  return f;
}

// ---- 1: similarity correctness ----
Outcome similarity() {
  std::mt19937_64 rng(101);
  double worst_self = 0.0, worst_affine = 0.0;
  int argmax_hits = 0;
  for (int k = 0; k < 100; ++k) {
    const Frame img = random_frame(64, 48, rng);
    std::uniform_int_distribution<int> size(5, 15);
    const int w = size(rng), h = size(rng);
    std::uniform_int_distribution<int> px(0, img.width - w), py(0, img.height - h);
    const Rect r{px(rng), py(rng), w, h};
    const Template t = Template::cut(img, r);
    const Measure m = k % 2 ? Measure::ccorr_normed : Measure::ccoeff_normed;
    const ResponseMap resp = response_map(img, t, m);
    worst_self = std::max(worst_self, std::abs(resp.at_placement(r.x, r.y) - 1.0));
    int bx = 0, by = 0;
    double best = -2.0;
    for (int y = 0; y < resp.scores.height(); ++y)
      for (int x = 0; x < resp.scores.width(); ++x)
        if (resp.scores(x, y) > best) {
          best = resp.scores(x, y);
          bx = x;
          by = y;
        }
    argmax_hits += (bx + resp.origin_x == r.x && by + resp.origin_y == r.y) ? 1 : 0;

    // a * I + b with integer a, b keeps the transformed frame exact in u16.
    Frame scaled = img;
    const int a = 1 + k % 7, b = 37 * (k % 11);
    for (auto& p : scaled.pixels) p = static_cast<std::uint16_t>(std::min(65535, a * (p % 8192) + b));
    Frame base = img;
    for (auto& p : base.pixels) p = static_cast<std::uint16_t>(p % 8192);
    const Template tb = Template::cut(base, r);
    const ResponseMap r1 = response_map(base, tb, Measure::ccoeff_normed);
    const ResponseMap r2 = response_map(scaled, tb, Measure::ccoeff_normed);
    for (std::size_t i = 0; i < r1.scores.size(); ++i)
      worst_affine = std::max(worst_affine, std::abs(r1.scores.values()[i] - r2.scores.values()[i]));
  }
  Outcome o;
  o.pass = worst_self <= kSelfMatchTol && argmax_hits == 100 && worst_affine <= kAffineTol;
  std::ostringstream d;
  d << "max |self-1| " << worst_self << " (<= " << kSelfMatchTol << "), exact argmax " << argmax_hits
    << "/100, max affine deviation " << worst_affine << " (<= " << kAffineTol << ")";
  o.detail = d.str();
  return o;
}

// ---- 2: subpixel refinement ----
Outcome subpixel() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> shift(-0.5, 0.5);
  const Point2 centre{32.0, 30.0};
  std::mt19937_64 noiseless(0);  // unused: noise_std is 0
  const Frame ref = blob_frame(64, 64, centre, 2.5, 900.0, 0.0, noiseless);
  const Template t = Template::cut(ref, Rect{25, 23, 15, 15});
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Point2 s{shift(rng), shift(rng)};
    const Frame moved = blob_frame(64, 64, centre + s, 2.5, 900.0, 0.0, noiseless);
    for (Measure m : {Measure::ccoeff_normed, Measure::ccorr_normed}) {
      const MatchResult r = match_template(moved, t, m, std::nullopt);
      worst = std::max({worst, std::abs(r.position.x - 25.0 - s.x), std::abs(r.position.y - 23.0 - s.y)});
    }
  }
  return {worst <= kSubpixelTol, "max per-axis error " + fmt("%.4f", worst) + " px over 100 shifts x 2 measures (<= " +
                                     fmt("%.2f", kSubpixelTol) + ")"};
}

// ---- 3: zero drift on identical frames ----
Outcome zero_drift() {
  std::mt19937_64 rng(303);
  const Frame f = blob_frame(64, 64, {30.4, 27.6}, 2.5, 900.0, 8.0, rng);
  ReferenceSequence ref;
  ref.name = "still";
  for (int i = 0; i < 500; ++i) {
    Frame g = f;
    g.timestamp_ms = 200.0 * i;
    ref.frames.push_back(std::move(g));
  }
  const RoiSpec rois{{Roi{"v", Rect{23, 20, 15, 15}}}};
  double drift = 0.0;
  for (Measure m : {Measure::ccoeff_normed, Measure::ccorr_normed}) {
    TrackOptions opt;
    opt.measure = m;
    const TrackResult r = track_reference(ref, rois, opt);
    for (std::size_t i = 0; i < r.trace.frame_count(); ++i)
      drift = std::max(drift, norm(r.trace.position(i, 0) - Point2{23.0, 20.0}));
  }
  return {drift == 0.0, "max drift " + fmt("%.17g", drift) + " px over 500 frames x 2 measures (== 0)"};
}

// ---- 4 + 5: method ordering and threshold monotonicity ----
struct SweepOutcome {
  Outcome ordering, monotone;
};

SweepOutcome ordering_and_monotonicity(double& seconds) {
  SweepOutcome out;
  std::vector<SweepRow> rows;
  seconds = timed([&] {
    PhantomGenerator gen(modulated_phantom_spec(8.0, 0.6), 7);
    const Phantom ph = gen.generate();
    const RoiSpecs rois{{1, gen.rois(ph.truth, 1)}, {2, gen.rois(ph.truth, 2)}};
    rows = sweep(ph.dataset, rois, SweepGrid{});
  });

  bool ordered = true, monotone = true;
  std::ostringstream d;
  d.setf(std::ios::fixed);
  d.precision(1);
  for (int reference : {1, 2})
    for (Measure measure : {Measure::ccorr_normed, Measure::ccoeff_normed}) {
      double gain[3];
      int i = 0;
      d << "ref" << reference << '/' << to_string(measure) << ':';
      for (double thr : {0.5, 1.0, 2.0}) {
        const double b = find_row(rows, Method::baseline, measure, thr, reference)->rate;
        const double u = find_row(rows, Method::updating, measure, thr, reference)->rate;
        ordered = ordered && u > b;
        gain[i++] = u - b;
        d << ' ' << thr << "px " << b << "->" << u;
      }
      ordered = ordered && gain[2] >= gain[0];
      d << " (gain@2 " << gain[2] << " vs gain@0.5 " << gain[0] << ")" << (reference == 2 && measure == Measure::ccoeff_normed ? "" : "; ");
      for (Method method : {Method::baseline, Method::updating}) {
        const double r05 = find_row(rows, method, measure, 0.5, reference)->rate;
        const double r1 = find_row(rows, method, measure, 1.0, reference)->rate;
        const double r2 = find_row(rows, method, measure, 2.0, reference)->rate;
        monotone = monotone && r05 <= r1 && r1 <= r2;
      }
    }
  out.ordering = {ordered, d.str()};
  out.monotone = {monotone, std::to_string(rows.size()) + " sweep rows, rate(0.5) <= rate(1) <= rate(2) for all 8 method/measure/reference series"};
  return out;
}

// ---- 6: oracle equivalence ----
Outcome oracle_equivalence() {
  PhantomGenerator gen(modulated_phantom_spec(0.0, 0.0), 11);
  const Phantom ph = gen.generate();
  const RoiSpec rois = gen.rois(ph.truth, 1);
  const ReconstructionConfig base;
  const TrackedDataset tracked = track_dataset(ph.dataset, rois, base);
  std::size_t total = 0, agree = 0, outside_band = 0;
  double worst_gap = 0.0;
  for (double thr : {0.5, 1.0, 2.0}) {
    const auto decisions = evaluate_decisions(ph.dataset, tracked, thr, base.aggregation);
    const auto oracle = oracle_matches(ph.truth, 1, thr, base.aggregation);
    if (decisions.size() != oracle.size()) return {false, "decision count differs from oracle"};
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      ++total;
      if (decisions[i].accepted == oracle[i].accepted) {
        ++agree;
        continue;
      }
      const double gap = std::abs(oracle[i].aggregate - thr);
      worst_gap = std::max(worst_gap, gap);
      if (gap > kOracleBand) ++outside_band;
    }
  }
  const double pct = 100.0 * static_cast<double>(agree) / static_cast<double>(total);
  std::ostringstream d;
  d << "agreement " << fmt("%.3f", pct) << "% of " << total << " decisions (>= " << kOracleAgreement
    << "%), disagreements outside +/-" << kOracleBand << " px band: " << outside_band << " (worst gap "
    << fmt("%.4f", worst_gap) << " px)";
  return {pct >= kOracleAgreement && outside_band == 0, d.str()};
}

// ---- 7: region speedup ----
Outcome region_speedup() {
  PhantomSpec spec;
  spec.width = 140;
  spec.height = 176;
  spec.reference_frames = 31;
  spec.interleaved_sequences = 5;
  spec.navigators_per_sequence = 12;
  spec.noise_std = 4.0;
  spec.roi_half_size = 9;
  VesselSpec a;
  a.center = {50.0, 70.0};
  a.radius = 2.5;
  a.modulation_depth = 0.3;
  VesselSpec b;
  b.center = {95.0, 110.0};
  b.motion = {-0.2, 0.8};
  b.radius = 5.5;
  b.peak = 700.0;
  b.modulation_depth = 0.3;
  spec.vessels = {a, b};
  PhantomGenerator gen(spec, 5);
  const Phantom ph = gen.generate();
  const TimingResult t = compare_timing(ph.dataset, gen.rois(ph.truth, 1), ReconstructionConfig{}, 3);
  std::ostringstream d;
  d << "140x176 navigators: whole-frame " << fmt("%.3f", t.full_frame_seconds) << " s, region "
    << fmt("%.3f", t.region_seconds) << " s, speedup " << fmt("%.1f", t.speedup) << "x (>= " << kMinSpeedup
    << "), identical decisions " << (t.identical_decisions ? "yes" : "no") << ", widened " << t.widened;
  return {t.speedup >= kMinSpeedup && t.identical_decisions && t.widened == 0, d.str()};
}

// ---- 8: SNR gain from averaging ----
Outcome snr() {
  PhantomSpec spec;
  spec.reference_frames = 5;
  spec.interleaved_sequences = 1;
  spec.navigators_per_sequence = 17;
  spec.noise_std = 20.0;
  spec.width = 96;
  spec.height = 96;
  spec.replay_reference = false;
  spec.signal.amplitude_px = 0.0;  // every data frame shows the same anatomy
  spec.vessels.front().center = {48.0, 48.0};
  const Phantom noisy = generate_phantom(spec, 31);
  PhantomSpec clean_spec = spec;
  clean_spec.noise_std = 0.0;
  const Phantom clean = generate_phantom(clean_spec, 31);
  const auto& frames = noisy.dataset.interleaved[0].frames;
  const Grid<double> truth = average_bin(std::vector<Frame>{clean.dataset.interleaved[0].frames[1]});

  const auto residual_std = [&](std::size_t n) {
    std::vector<const Frame*> bin;
    for (std::size_t k = 0; k < n; ++k) bin.push_back(&frames[InterleavedSequence::data_ordinal(k)]);
    const Grid<double> avg = average_bin(std::span<const Frame* const>(bin));
    double m = 0.0, s = 0.0;
    const auto a = avg.values(), t = truth.values();
    for (std::size_t i = 0; i < a.size(); ++i) m += a[i] - t[i];
    m /= static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - t[i] - m) * (a[i] - t[i] - m);
    return std::sqrt(s / static_cast<double>(a.size() - 1));
  };
  const double single = residual_std(1);
  bool pass = true;
  std::ostringstream d;
  d << "single-frame noise " << fmt("%.2f", single);
  for (std::size_t n : {4u, 9u, 16u}) {
    const double gain = single / residual_std(n);
    const double rel = std::abs(gain / std::sqrt(static_cast<double>(n)) - 1.0);
    pass = pass && rel <= kSnrTol;
    d << "; N=" << n << " gain " << fmt("%.3f", gain) << " vs " << fmt("%.3f", std::sqrt(static_cast<double>(n)))
      << " (" << fmt("%.1f", 100.0 * rel) << "%)";
  }
  d << " (<= " << 100.0 * kSnrTol << "%)";
  return {pass, d.str()};
}

// ---- 9: end-to-end determinism through the CLI ----
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool identical_trees(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::vector<std::string> na, nb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) na.push_back(fs::relative(e.path(), a).string());
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) nb.push_back(fs::relative(e.path(), b).string());
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  files = na.size();
  if (na != nb) return false;
  for (const auto& n : na)
    if (slurp(a / n) != slurp(b / n)) return false;
  return true;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NAVSORT_CLI_PATH) + " " + args + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  std::random_device rd;
  const fs::path root = fs::temp_directory_path() / ("navsort-acceptance-" + std::to_string(rd()));
  fs::create_directories(root);
  bool ok = true;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    ok = ok && run_cli("phantom --preset modulated --seed 17 --out '" + (dir / "data").string() + "'") == 0;
    ok = ok && run_cli("reconstruct --dataset '" + (dir / "data").string() + "' --out '" + (dir / "out").string() +
                       "'") == 0;
  }
  std::size_t files = 0;
  const bool same = ok && identical_trees(root / "a", root / "b", files);
  std::error_code ec;
  fs::remove_all(root, ec);
  if (!ok) return {false, "CLI run failed"};
  return {same, std::to_string(files) + " files (dataset + reconstruction) compared, " +
                    (same ? std::string("bit-identical") : std::string("differences found"))};
}

}  // namespace

int main() {
  Outcome o;
  double s = timed([&] { o = similarity(); });
  report(1, "similarity correctness", o, s, kBudgetSimilarity);

  s = timed([&] { o = subpixel(); });
  report(2, "subpixel refinement", o, s, kBudgetSubpixel);

  s = timed([&] { o = zero_drift(); });
  report(3, "zero drift on identical frames", o, s, kBudgetDrift);

  double sweep_seconds = 0.0;
  const SweepOutcome sw = ordering_and_monotonicity(sweep_seconds);
  report(4, "updating beats baseline at every threshold", sw.ordering, sweep_seconds, kBudgetOrdering);
  report(5, "rate monotone in threshold", sw.monotone, sweep_seconds, kBudgetOrdering);

  s = timed([&] { o = oracle_equivalence(); });
  report(6, "oracle equivalence on noise-free phantom", o, s, kBudgetOracle);

  s = timed([&] { o = region_speedup(); });
  report(7, "search-region speedup", o, s, kBudgetSpeedup);

  s = timed([&] { o = snr(); });
  report(8, "SNR gain from averaging", o, s, kBudgetSnr);

  s = timed([&] { o = determinism(); });
  report(9, "end-to-end determinism", o, s, kBudgetDeterminism);

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}

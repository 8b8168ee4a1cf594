// navsort command-line front end.
//
// Exit codes: 0 success, 1 invalid or unreadable input, 2 processing failure,
// 64 command-line usage error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "navsort/navsort.hpp"

namespace fs = std::filesystem;
using namespace navsort;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitProcessing = 2;
constexpr int kExitUsage = 64;

struct CommonOptions {
  std::string dataset;
  std::string rois;
  std::string rois_ref2;
  std::string out;
  int reference = 1;
  std::string method = "updating";
  std::string measure = "ccoeff";
  double threshold = 1.0;
  int search_radius = 10;
  bool full_frame = false;
  double min_score = 0.5;
  std::string aggregation = "sum";
  std::string interleaved_templates = "matching_reference";
  unsigned jobs = 0;
  bool report_timing = false;
};

void add_dataset_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--dataset", o.dataset, "Dataset directory (contains dataset.json)")->required();
  cmd->add_option("--rois", o.rois, "ROI JSON for reference 1 (defaults to <dataset>/rois.json)");
  cmd->add_option("--rois-ref2", o.rois_ref2, "ROI JSON for reference 2 (defaults to <dataset>/rois_ref2.json)");
  cmd->add_option("--jobs", o.jobs, "Worker threads, 0 for all cores");
}

void add_tracking_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--reference", o.reference, "Reference sequence to sort against")->check(CLI::IsMember({1, 2}));
  cmd->add_option("--method", o.method, "baseline or updating")->check(CLI::IsMember({"baseline", "updating"}));
  cmd->add_option("--measure", o.measure, "ccoeff or ccorr")->check(CLI::IsMember({"ccoeff", "ccorr"}));
  cmd->add_option("--search-radius", o.search_radius, "Search region radius in px")->check(CLI::PositiveNumber);
  cmd->add_flag("--full-frame", o.full_frame, "Search whole frames instead of regions");
  cmd->add_option("--min-score", o.min_score, "Region score below which the whole frame is searched");
  cmd->add_option("--aggregation", o.aggregation, "sum or mean")->check(CLI::IsMember({"sum", "mean"}));
  cmd->add_option("--interleaved-templates", o.interleaved_templates,
                  "Templates for interleaved navigators: matching_reference or initial")
      ->check(CLI::IsMember({"matching_reference", "initial"}));
}

ReconstructionConfig make_config(const CommonOptions& o) {
  ReconstructionConfig c;
  c.method = parse_method(o.method);
  c.measure = parse_measure(o.measure);
  c.threshold = o.threshold;
  c.search_radius = o.full_frame ? std::nullopt : std::optional<int>(o.search_radius);
  c.min_score = o.min_score;
  c.aggregation = parse_aggregation(o.aggregation);
  c.reference = o.reference;
  c.interleaved_templates = parse_interleaved_templates(o.interleaved_templates);
  c.jobs = o.jobs;
  return c;
}

fs::path rois_path(const CommonOptions& o, int reference) {
  const std::string& given = reference == 1 ? o.rois : o.rois_ref2;
  if (!given.empty()) return given;
  return fs::path(o.dataset) / (reference == 1 ? "rois.json" : "rois_ref2.json");
}

RoiSpec load_rois_for(const CommonOptions& o, int reference) {
  const fs::path path = rois_path(o, reference);
  if (reference == 2 && !fs::exists(path)) return load_rois(rois_path(o, 1));
  return load_rois(path);
}

int run_phantom(const std::string& spec_path, const std::string& preset, std::uint64_t seed, const std::string& out) {
  PhantomSpec spec = spec_path.empty() ? (preset == "modulated" ? modulated_phantom_spec() : PhantomSpec{})
                                       : load_phantom_spec(spec_path);
  PhantomGenerator gen(spec, seed);
  const Phantom phantom = gen.generate();
  write_phantom(gen, phantom, out);
  write_text(fs::path(out) / "phantom.json", to_json(spec).dump(2) + "\n");
  std::cout << "wrote phantom with " << phantom.dataset.interleaved.size() << " interleaved sequences to " << out
            << '\n';
  return kExitOk;
}

int run_validate(const CommonOptions& o) {
  const Dataset ds = load_dataset(o.dataset);
  const fs::path rois = rois_path(o, 1);
  if (!o.rois.empty() || fs::exists(rois)) validate(load_rois(rois), ds.frame_width(), ds.frame_height());
  std::cout << "ok: " << ds.frame_width() << "x" << ds.frame_height() << ", " << ds.reference_1.frames.size() << "+"
            << ds.reference_2.frames.size() << " reference frames, " << ds.interleaved.size()
            << " interleaved sequences\n";
  return kExitOk;
}

int run_track(const CommonOptions& o) {
  const Dataset ds = load_dataset(o.dataset);
  const ReconstructionConfig config = make_config(o);
  TrackOptions options;
  options.measure = config.measure;
  options.mode = config.method == Method::baseline ? TrackingMode::fixed : TrackingMode::updating;
  options.search_radius = config.search_radius;
  options.min_score = config.min_score;
  const TrackResult result = track_reference(ds.reference(o.reference), load_rois_for(o, o.reference), options);
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "trace.csv", trace_csv(result.trace));
  std::cout << "tracked " << result.trace.vessel_count() << " vessels through " << result.trace.frame_count()
            << " frames; widened searches: " << result.trace.widened_count() << '\n';
  return kExitOk;
}

int run_reconstruct(const CommonOptions& o) {
  const Dataset ds = load_dataset(o.dataset);
  const ReconstructionConfig config = make_config(o);
  const Reconstruction rec = reconstruct(ds, load_rois_for(o, o.reference), config);
  write_reconstruction(rec, o.out, o.report_timing);
  std::cout << "reconstruction rate " << rec.report.reconstruction_rate << "% (" << rec.report.missing.size()
            << " time points with gaps, " << rec.report.widened_count << " widened searches)\n";
  return kExitOk;
}

int run_sweep(const CommonOptions& o, bool compare) {
  const Dataset ds = load_dataset(o.dataset);
  RoiSpecs rois{{1, load_rois_for(o, 1)}, {2, load_rois_for(o, 2)}};
  const ReconstructionConfig base = make_config(o);
  const auto rows = sweep(ds, rois, SweepGrid{}, base);
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "rates.csv", rates_csv(rows, o.report_timing));
  std::cout << "wrote " << rows.size() << " sweep rows\n";
  if (compare) {
    ReconstructionConfig timed = base;
    timed.method = Method::updating;
    if (!timed.search_radius) timed.search_radius = 10;
    const TimingResult t = compare_timing(ds, rois_for(rois, timed.reference), timed);
    write_text(fs::path(o.out) / "timing.csv", timing_csv(t));
    std::cout << "region search speedup " << t.speedup << "x, identical decisions: "
              << (t.identical_decisions ? "yes" : "no") << ", widened: " << t.widened << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Respiratory sorting of interleaved navigator/data MRI series into 4D volumes"};
  app.require_subcommand(1);
  CommonOptions o;

  std::string spec_path;
  std::string preset = "default";
  std::uint64_t seed = 1;
  std::string phantom_out;
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic dataset with ground truth");
  phantom->add_option("--spec", spec_path, "Phantom settings JSON")->check(CLI::ExistingFile);
  phantom->add_option("--preset", preset, "Built-in settings when --spec is absent: default or modulated")
      ->check(CLI::IsMember({"default", "modulated"}));
  phantom->add_option("--seed", seed, "Noise seed");
  phantom->add_option("--out", phantom_out, "Output dataset directory")->required();

  auto* check = app.add_subcommand("validate", "Check a dataset (and its ROI file) for structural errors");
  add_dataset_options(check, o);

  auto* track = app.add_subcommand("track", "Track vessels through a reference sequence, writing trace.csv");
  add_dataset_options(track, o);
  add_tracking_options(track, o);
  track->add_option("--out", o.out, "Output directory")->required();

  auto* recon = app.add_subcommand("reconstruct", "Sort data slices into a 4D volume");
  add_dataset_options(recon, o);
  add_tracking_options(recon, o);
  recon->add_option("--threshold", o.threshold, "Acceptance threshold in px")->check(CLI::NonNegativeNumber);
  recon->add_option("--out", o.out, "Output directory")->required();
  recon->add_flag("--report-timing", o.report_timing, "Record wall-clock time in report.json");

  bool compare = false;
  auto* sw = app.add_subcommand("sweep", "Reconstruction rates over threshold x measure x reference x method");
  add_dataset_options(sw, o);
  sw->add_option("--search-radius", o.search_radius, "Search region radius in px")->check(CLI::PositiveNumber);
  sw->add_option("--min-score", o.min_score, "Region score below which the whole frame is searched");
  sw->add_option("--aggregation", o.aggregation, "sum or mean")->check(CLI::IsMember({"sum", "mean"}));
  sw->add_option("--out", o.out, "Output directory")->required();
  sw->add_flag("--compare-timing", compare, "Also time region versus whole-frame search (timing.csv)");
  sw->add_flag("--report-timing", o.report_timing, "Add a seconds column to rates.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*phantom) return run_phantom(spec_path, preset, seed, phantom_out);
    if (*check) return run_validate(o);
    if (*track) return run_track(o);
    if (*recon) return run_reconstruct(o);
    if (*sw) return run_sweep(o, compare);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInput;
  } catch (const SpecError& e) {
    std::cerr << "invalid phantom settings: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "processing failed: " << e.what() << '\n';
    return kExitProcessing;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}

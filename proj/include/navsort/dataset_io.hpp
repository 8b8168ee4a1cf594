#pragma once

// Dataset directory layout:
//   dataset.json                  spacing, slice gap, frame size, sequence dirs in acquisition order
//   <seq>/seq.json                frame count, kinds, timestamps, slice positions
//   <seq>/frames.u16le            concatenated row-major frames, uint16 little-endian, no header

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "navsort/imgcore.hpp"

namespace navsort {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kDatasetFormat = "navsort-dataset";

// Raw little-endian uint16 stack I/O, shared by dataset and volume writers.
inline std::vector<std::uint16_t> read_u16le(const fs::path& path, std::size_t expected_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected_bytes = expected_count * 2;
  if (bytes.size() < expected_bytes)
    throw IoError(path.string() + ": truncated, " + std::to_string(bytes.size()) + " bytes, expected " +
                  std::to_string(expected_bytes));
  if (bytes.size() > expected_bytes)
    throw IoError(path.string() + ": " + std::to_string(bytes.size() - expected_bytes) + " trailing bytes");
  std::vector<std::uint16_t> values(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i)
    values[i] = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
  return values;
}

inline void append_u16le(std::vector<unsigned char>& out, std::span<const std::uint16_t> values) {
  out.reserve(out.size() + values.size() * 2);
  for (std::uint16_t v : values) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
  }
}

inline void write_bytes(const fs::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

namespace detail {

struct RawSequence {
  std::string name;
  std::vector<Frame> frames;
  double frame_period_ms = 0.0;
  double navigator_position_mm = 0.0;
  double data_position_mm = 0.0;
  bool has_data = false;
};

template <typename T>
T json_field(const json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) throw ValidationError(file.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(file.string() + ": field '" + key + "': " + e.what());
  }
}

inline FrameKind parse_kind(const std::string& s, const fs::path& file) {
  if (s == "navigator") return FrameKind::navigator;
  if (s == "data") return FrameKind::data;
  throw ValidationError(file.string() + ": unknown frame kind '" + s + "'");
}

inline RawSequence read_sequence(const fs::path& dir, const std::string& name, int width, int height) {
  const fs::path meta_path = dir / "seq.json";
  const json meta = read_json(meta_path);
  RawSequence raw;
  raw.name = name;
  const auto count = json_field<std::size_t>(meta, "frame_count", meta_path);
  const auto kinds = json_field<std::vector<std::string>>(meta, "kinds", meta_path);
  const auto stamps = json_field<std::vector<double>>(meta, "timestamps_ms", meta_path);
  if (kinds.size() != count || stamps.size() != count)
    throw ValidationError(meta_path.string() + ": kinds/timestamps length differs from frame_count");
  raw.navigator_position_mm = json_field<double>(meta, "navigator_position_mm", meta_path);
  if (meta.contains("data_position_mm")) {
    raw.has_data = true;
    raw.data_position_mm = json_field<double>(meta, "data_position_mm", meta_path);
  }
  if (meta.contains("frame_period_ms")) raw.frame_period_ms = json_field<double>(meta, "frame_period_ms", meta_path);

  const std::size_t frame_pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const auto values = read_u16le(dir / "frames.u16le", count * frame_pixels);
  raw.frames.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    Frame& f = raw.frames[i];
    f.width = width;
    f.height = height;
    f.kind = parse_kind(kinds[i], meta_path);
    f.timestamp_ms = stamps[i];
    f.slice_position_mm = f.kind == FrameKind::navigator ? raw.navigator_position_mm : raw.data_position_mm;
    f.pixels.assign(values.begin() + static_cast<std::ptrdiff_t>(i * frame_pixels),
                    values.begin() + static_cast<std::ptrdiff_t>((i + 1) * frame_pixels));
  }
  if (!raw.has_data)
    for (std::size_t i = 0; i < count; ++i)
      if (raw.frames[i].kind == FrameKind::data)
        throw ValidationError(meta_path.string() + ": data frame " + std::to_string(i) + " without data_position_mm");
  return raw;
}

inline void write_sequence(const fs::path& dir, std::span<const Frame> frames, double navigator_position_mm,
                           const double* data_position_mm, const double* frame_period_ms) {
  fs::create_directories(dir);
  json meta;
  meta["frame_count"] = frames.size();
  std::vector<std::string> kinds;
  std::vector<double> stamps;
  std::vector<unsigned char> bytes;
  for (const Frame& f : frames) {
    kinds.emplace_back(to_string(f.kind));
    stamps.push_back(f.timestamp_ms);
    append_u16le(bytes, f.pixels);
  }
  meta["kinds"] = kinds;
  meta["timestamps_ms"] = stamps;
  meta["navigator_position_mm"] = navigator_position_mm;
  if (data_position_mm) meta["data_position_mm"] = *data_position_mm;
  if (frame_period_ms) meta["frame_period_ms"] = *frame_period_ms;
  write_text(dir / "seq.json", meta.dump(2) + "\n");
  write_bytes(dir / "frames.u16le", bytes);
}

}  // namespace detail

// Loads and validates a dataset directory.
inline Dataset load_dataset(const fs::path& root) {
  const fs::path meta_path = root / "dataset.json";
  const json meta = read_json(meta_path);
  using detail::json_field;
  const int width = json_field<int>(meta, "width", meta_path);
  const int height = json_field<int>(meta, "height", meta_path);
  if (width <= 0 || height <= 0) throw ValidationError(meta_path.string() + ": frame dimensions must be positive");
  const auto spacing = json_field<std::vector<double>>(meta, "in_plane_spacing_mm", meta_path);
  if (spacing.size() != 2) throw ValidationError(meta_path.string() + ": in_plane_spacing_mm needs two entries");
  const auto order = json_field<std::vector<std::string>>(meta, "sequences", meta_path);
  const auto ref1 = json_field<std::string>(meta, "reference_1", meta_path);
  const auto ref2 = json_field<std::string>(meta, "reference_2", meta_path);
  if (ref1 == ref2) throw ValidationError(meta_path.string() + ": reference_1 and reference_2 must differ");
  std::set<std::string> seen;
  for (const auto& name : order)
    if (!seen.insert(name).second) throw ValidationError(meta_path.string() + ": duplicate sequence '" + name + "'");
  if (!seen.count(ref1) || !seen.count(ref2))
    throw ValidationError(meta_path.string() + ": reference sequences must appear in 'sequences'");

  Dataset ds;
  ds.in_plane_spacing_mm = {spacing[0], spacing[1]};
  ds.slice_gap_mm = meta.contains("slice_gap_mm") ? json_field<double>(meta, "slice_gap_mm", meta_path) : 4.0;
  ds.acquisition_order = order;

  int interleaved_index = 0;
  for (const auto& name : order) {
    auto raw = detail::read_sequence(root / name, name, width, height);
    if (name == ref1 || name == ref2) {
      ReferenceSequence& ref = name == ref1 ? ds.reference_1 : ds.reference_2;
      ref.name = name;
      ref.frames = std::move(raw.frames);
      ref.frame_period_ms = raw.frame_period_ms;
    } else {
      if (!raw.has_data) throw ValidationError("sequence '" + name + "': interleaved sequence without data_position_mm");
      InterleavedSequence seq;
      seq.name = name;
      seq.frames = std::move(raw.frames);
      seq.data_slice_position_mm = raw.data_position_mm;
      seq.sequence_index = interleaved_index++;
      ds.interleaved.push_back(std::move(seq));
    }
  }
  validate(ds);
  return ds;
}

inline void write_dataset(const Dataset& ds, const fs::path& root) {
  validate(ds);
  fs::create_directories(root);
  std::vector<std::string> order = ds.acquisition_order;
  if (order.empty()) {
    order.push_back(ds.reference_1.name);
    for (const auto& s : ds.interleaved) order.push_back(s.name);
    order.push_back(ds.reference_2.name);
  }
  json meta;
  meta["format"] = kDatasetFormat;
  meta["version"] = 1;
  meta["width"] = ds.frame_width();
  meta["height"] = ds.frame_height();
  meta["in_plane_spacing_mm"] = {ds.in_plane_spacing_mm.x, ds.in_plane_spacing_mm.y};
  meta["slice_gap_mm"] = ds.slice_gap_mm;
  meta["sequences"] = order;
  meta["reference_1"] = ds.reference_1.name;
  meta["reference_2"] = ds.reference_2.name;
  write_text(root / "dataset.json", meta.dump(2) + "\n");

  const double nav_position = ds.reference_1.frames.front().slice_position_mm;
  for (const ReferenceSequence* ref : {&ds.reference_1, &ds.reference_2})
    detail::write_sequence(root / ref->name, ref->frames, nav_position, nullptr, &ref->frame_period_ms);
  for (const auto& seq : ds.interleaved)
    detail::write_sequence(root / seq.name, seq.frames, nav_position, &seq.data_slice_position_mm, nullptr);
}

}  // namespace navsort

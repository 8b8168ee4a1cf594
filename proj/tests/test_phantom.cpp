#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace navsort;
using namespace navsort::testing;

TEST(PhantomSpec, RejectsImpossibleSettings) {
  PhantomSpec s = small_spec();
  s.vessels.clear();
  EXPECT_THROW(PhantomGenerator(s, 1), SpecError);

  s = small_spec();
  s.vessels.front().center = {3.0, 30.0};
  EXPECT_THROW(PhantomGenerator(s, 1), SpecError);

  s = small_spec();
  s.signal.amplitude_px = 40.0;
  EXPECT_THROW(PhantomGenerator(s, 1), SpecError);

  s = small_spec();
  s.reference_frames = 2;
  EXPECT_THROW(PhantomGenerator(s, 1), SpecError);

  s = small_spec();
  s.vessels.front().modulation_depth = 1.5;
  EXPECT_THROW(PhantomGenerator(s, 1), SpecError);

  s = small_spec();
  s.noise_std = -1.0;
  EXPECT_THROW(PhantomGenerator(s, 1), SpecError);
}

TEST(Phantom, StructureFollowsRequestedLayout) {
  const PhantomSpec spec = small_spec();
  const Phantom ph = generate_phantom(spec, 1);
  const Dataset& ds = ph.dataset;
  EXPECT_EQ(ds.reference_1.frames.size(), spec.reference_frames);
  EXPECT_EQ(ds.reference_2.frames.size(), spec.reference_frames);
  ASSERT_EQ(ds.interleaved.size(), spec.interleaved_sequences);
  for (const auto& seq : ds.interleaved) EXPECT_EQ(seq.navigator_count(), spec.navigators_per_sequence);
  EXPECT_EQ(ds.acquisition_order.front(), "ref1");
  EXPECT_EQ(ds.acquisition_order.back(), "ref2");
  EXPECT_EQ(ds.interleaved[2].name, "seq002");
  EXPECT_EQ(ds.interleaved[2].data_slice_position_mm, spec.first_slice_mm + 2 * spec.slice_gap_mm);
  EXPECT_EQ(ph.truth.interleaved[0].navigators.size(), spec.navigators_per_sequence);
  EXPECT_NO_THROW(validate(ds));
}

TEST(Phantom, SameSeedIsReproducibleAndSeedDrivesNoise) {
  PhantomSpec spec = small_spec();
  spec.noise_std = 10.0;
  const Phantom a = generate_phantom(spec, 9);
  const Phantom b = generate_phantom(spec, 9);
  const Phantom c = generate_phantom(spec, 10);
  EXPECT_EQ(a.dataset.interleaved[3].frames[7].pixels, b.dataset.interleaved[3].frames[7].pixels);
  EXPECT_NE(a.dataset.interleaved[3].frames[7].pixels, c.dataset.interleaved[3].frames[7].pixels);
  // The breathing signal does not depend on the noise seed.
  EXPECT_EQ(a.truth.reference_1.navigators[5].state, c.truth.reference_1.navigators[5].state);
}

TEST(Phantom, ReplayReferenceRepeatsReferenceStates) {
  PhantomSpec spec = small_spec();
  spec.replay_reference = true;
  const Phantom ph = generate_phantom(spec, 1);
  const auto& ref = ph.truth.reference_1.navigators;
  for (const auto& seq : ph.truth.interleaved)
    for (const auto& nav : seq.navigators) EXPECT_EQ(nav.state, ref[nav.frame % ref.size()].state);
  EXPECT_EQ(ph.dataset.interleaved[1].frames[4].pixels, ph.dataset.reference_1.frames[4].pixels);
}

TEST(Phantom, VesselsFollowBreathingValue) {
  const PhantomSpec spec = small_spec();
  const Phantom ph = generate_phantom(spec, 1);
  const auto& v = spec.vessels.front();
  for (const auto& nav : ph.truth.reference_1.navigators) {
    EXPECT_DOUBLE_EQ(nav.vessels[0].x, v.center.x + nav.state * v.motion.x);
    EXPECT_DOUBLE_EQ(nav.vessels[0].y, v.center.y + nav.state * v.motion.y);
  }
}

TEST(Phantom, RoisAreCentredOnFrameZero) {
  const PhantomSpec spec = modulated_phantom_spec();
  PhantomGenerator gen(spec, 1);
  const Phantom ph = gen.generate();
  for (int reference : {1, 2}) {
    const RoiSpec rois = gen.rois(ph.truth, reference);
    ASSERT_EQ(rois.size(), 2u);
    for (std::size_t v = 0; v < 2; ++v) {
      const Point2 c = ph.truth.reference(reference).navigators.front().vessels[v];
      const Rect& r = rois.rois[v].rect;
      EXPECT_EQ(r.w, 2 * spec.roi_half_size + 1);
      EXPECT_LE(std::abs(r.x + spec.roi_half_size - c.x), 0.5);
      EXPECT_LE(std::abs(r.y + spec.roi_half_size - c.y), 0.5);
    }
  }
}

TEST(Oracle, MatchesFollowTrueDisplacements) {
  const Phantom ph = generate_phantom(small_spec(), 1);
  const auto decisions = oracle_matches(ph.truth, 1, 1.0);
  EXPECT_EQ(decisions.size(), 19u * 4u * 11u);
  const auto& d = decisions[57];
  const auto& ref = ph.truth.reference_1.navigators;
  const auto& navs = ph.truth.interleaved[d.sequence_index].navigators;
  const std::size_t k = (d.data_frame_index - 1) / 2;
  const double expected = norm(ref[d.reference_timepoint - 1].vessels[0] - navs[k].vessels[0]) +
                          norm(ref[d.reference_timepoint + 1].vessels[0] - navs[k + 1].vessels[0]);
  EXPECT_NEAR(d.aggregate, expected, 1e-12);
  EXPECT_EQ(d.accepted, expected < 1.0);
  const auto mean = oracle_matches(ph.truth, 1, 1.0, Aggregation::mean);
  EXPECT_NEAR(mean[57].aggregate, expected / 2.0, 1e-12);
}

TEST(PhantomJson, RoundTrip) {
  PhantomSpec spec = modulated_phantom_spec(5.0, 0.4);
  spec.perturbations = {{1.0, 0.8}};
  spec.signal.drift_px_per_min = 0.5;
  const PhantomSpec back = parse_phantom_spec(to_json(spec));
  EXPECT_EQ(to_json(back), to_json(spec));
  ASSERT_EQ(back.vessels.size(), 2u);
  ASSERT_TRUE(back.vessels[1].satellite.has_value());
  EXPECT_EQ(back.vessels[1].satellite->offset.y, 5.0);
  EXPECT_EQ(back.perturbations[0].amplitude_scale, 0.8);
}

TEST(PhantomJson, MalformedSpecIsSpecError) {
  EXPECT_THROW(parse_phantom_spec(nlohmann::json::parse(R"({"vessels":[{"y":3}]})")), SpecError);
  EXPECT_THROW(parse_phantom_spec(nlohmann::json::parse(R"({"width":"wide"})")), SpecError);
}

TEST(Phantom, WriteProducesLoadableDataset) {
  TempDir dir;
  PhantomGenerator gen(small_spec(), 1);
  const Phantom ph = gen.generate();
  write_phantom(gen, ph, dir.path());
  const Dataset ds = load_dataset(dir.path());
  EXPECT_EQ(ds.interleaved.size(), 4u);
  EXPECT_EQ(load_rois(dir / "rois.json").size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "rois_ref2.json"));
  const std::string truth = read_file(dir / "ground_truth.csv");
  EXPECT_EQ(truth.rfind("sequence,frame,state,vessel,x,y\n", 0), 0u);
}

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "dsr/image_io.h"
#include "dsr/mask_pipeline.h"

using namespace dsr;

namespace {

LabelMask blank(int w, int h) {
  LabelMask m;
  m.labels = Image<std::uint8_t>(w, h);
  return m;
}

void fill(LabelMask& m, int r0, int c0, int r1, int c1, std::uint8_t label) {
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) m.labels(r, c) = label;
}

Keypoints kps(std::initializer_list<std::array<double, 3>> rows) {
  Keypoints k(static_cast<Eigen::Index>(rows.size()), 3);
  int i = 0;
  for (const auto& r : rows) k.row(i++) << r[0], r[1], r[2];
  return k;
}

}  // namespace

TEST(MaskPipeline, CropGrowsBoxByOffset) {
  const CropResult r = crop_by_keypoints(blank(640, 480), kps({{100, 100, 0.9}, {200, 300, 0.8}, {900, 900, 0.0}}));
  ASSERT_TRUE(r.valid);
  EXPECT_EQ(r.rect, (CropRect{70, 70, 230, 330}));
}

TEST(MaskPipeline, CropClampsAtCorners) {
  const CropResult r = crop_by_keypoints(blank(64, 48), kps({{5, 3, 1}, {60, 46, 1}}));
  ASSERT_TRUE(r.valid);
  EXPECT_EQ(r.rect, (CropRect{0, 0, 63, 47}));
}

TEST(MaskPipeline, CropBlanksOutside) {
  LabelMask m = blank(100, 100);
  fill(m, 0, 0, 100, 100, kUpperClothes);
  const CropResult r = crop_by_keypoints(m, kps({{50, 50, 1}}), 10);
  EXPECT_EQ(r.rect, (CropRect{40, 40, 60, 60}));
  long inside = 0;
  for (auto v : r.mask.labels.data) inside += v == kUpperClothes;
  EXPECT_EQ(inside, 21 * 21);
}

TEST(MaskPipeline, ZeroConfidenceIsInvalid) {
  LabelMask m = blank(32, 32);
  fill(m, 0, 0, 32, 32, kFace);
  const SampleTargets t = build_sample_targets(m, kps({{5, 5, 0}, {20, 20, 0}}));
  EXPECT_FALSE(t.valid);
  EXPECT_FALSE(t.mc_mask);
  EXPECT_FALSE(t.c_mask);
}

TEST(MaskPipeline, SixtyPixelThreshold) {
  LabelMask m = blank(40, 40);
  fill(m, 0, 0, 1, 40, kFace);
  fill(m, 1, 0, 2, 19, kFace);  // 59
  EXPECT_TRUE(filter_small_labels(m).empty());
  m.labels(1, 19) = kFace;  // 60
  EXPECT_EQ(filter_small_labels(m), std::vector<int>{kFace});
}

TEST(MaskPipeline, ThresholdCountsAfterCrop) {
  LabelMask m = blank(200, 200);
  fill(m, 0, 0, 10, 10, kLeftArm);       // 100 px, outside the crop
  fill(m, 100, 100, 110, 110, kRightArm);
  const SampleTargets t = build_sample_targets(m, kps({{105, 105, 1}}));
  ASSERT_TRUE(t.valid);
  EXPECT_EQ(t.valid_mc_labels, std::vector<int>{kRightArm});
  ASSERT_TRUE(t.mc_mask);
  long on = 0;
  for (auto v : t.mc_mask->data) on += v;
  EXPECT_EQ(on, 100);
}

TEST(MaskPipeline, NoValidMinimalClothingDropsMcMask) {
  LabelMask m = blank(64, 64);
  fill(m, 10, 10, 50, 50, kUpperClothes);
  fill(m, 50, 10, 52, 20, kLeftArm);
  const SampleTargets t = build_sample_targets(m, kps({{30, 30, 1}}));
  ASSERT_TRUE(t.valid);
  EXPECT_FALSE(t.mc_mask);
  ASSERT_TRUE(t.c_mask);
  EXPECT_EQ((*t.c_mask)(30, 30), kCoarseUpperClothes);
  EXPECT_EQ((*t.c_mask)(51, 15), kCoarseMinimalClothing);
}

TEST(MaskPipeline, CoarseMapping) {
  LabelMask m = blank(kNumLabels, 1);
  for (int l = 0; l < kNumLabels; ++l) m.labels(0, l) = static_cast<std::uint8_t>(l);
  const Image<std::uint8_t> c = build_c_target(m);
  EXPECT_EQ(c(0, kDress), kCoarseUpperClothes);
  EXPECT_EQ(c(0, kSocks), kCoarseMinimalClothing);
  EXPECT_EQ(c(0, kSkirt), kCoarseLowerClothes);
  EXPECT_EQ(c(0, kPants), kCoarseLowerClothes);
  EXPECT_EQ(c(0, kJumpsuits), kCoarseUpperClothes);
  EXPECT_EQ(c(0, kCoat), kCoarseUpperClothes);
  EXPECT_EQ(c(0, kScarf), kCoarseMinimalClothing);
  EXPECT_EQ(c(0, kBackground), kCoarseBackground);
  const auto table = clothing_scheme().lookup();
  for (int l = 0; l < kNumLabels; ++l) EXPECT_EQ(c(0, l), table[l]);
}

TEST(MaskPipeline, BackgroundOnlyCropDropsCoarseMask) {
  LabelMask m = blank(64, 64);
  fill(m, 0, 0, 10, 64, kFace);
  const SampleTargets t = build_sample_targets(m, kps({{40, 50, 1}}), {5, 60});
  ASSERT_TRUE(t.valid);
  EXPECT_FALSE(t.c_mask);
  EXPECT_FALSE(t.mc_mask);
}

TEST(MaskPipeline, McMaskUnionOfValidLabels) {
  LabelMask m = blank(64, 64);
  fill(m, 0, 0, 10, 10, kFace);
  fill(m, 20, 0, 30, 10, kLeftShoe);
  fill(m, 40, 0, 42, 10, kRightShoe);  // 20 px, dropped
  fill(m, 50, 50, 60, 60, kHair);      // not minimal clothing
  const SampleTargets t = build_sample_targets(m, kps({{0, 0, 1}, {63, 63, 1}}));
  EXPECT_EQ(t.valid_mc_labels, (std::vector<int>{kLeftShoe, kFace}));
  ASSERT_TRUE(t.mc_mask);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) {
      const int l = m.labels(r, c);
      EXPECT_EQ((*t.mc_mask)(r, c), (l == kFace || l == kLeftShoe) ? 1 : 0);
    }
}

TEST(MaskPipeline, Idempotent) {
  std::mt19937_64 rng(70);
  std::uniform_int_distribution<int> lab(0, kNumLabels - 1);
  LabelMask m = blank(80, 60);
  for (auto& v : m.labels.data) v = static_cast<std::uint8_t>(lab(rng));
  const Keypoints k = kps({{20, 15, 1}, {50, 40, 0.5}});
  const SampleTargets a = build_sample_targets(m, k);
  LabelMask cropped = crop_by_keypoints(m, k).mask;
  const SampleTargets b = build_sample_targets(cropped, k);
  EXPECT_EQ(a.crop, b.crop);
  EXPECT_EQ(a.valid_mc_labels, b.valid_mc_labels);
  ASSERT_TRUE(a.mc_mask && b.mc_mask);
  EXPECT_EQ(a.mc_mask->data, b.mc_mask->data);
  EXPECT_EQ(a.c_mask->data, b.c_mask->data);
}

TEST(MaskPipeline, ShippedMappingMatchesScheme) {
  std::ifstream in(std::filesystem::path(DSR_DATA_DIR) / "dsr_c_mapping.json");
  ASSERT_TRUE(in);
  const CoarseScheme s = coarse_scheme_from_json(nlohmann::json::parse(in), LabelSet::universal());
  const CoarseScheme d = clothing_scheme();
  EXPECT_EQ(s.names, d.names);
  EXPECT_EQ(s.lookup(), d.lookup());
}

TEST(MaskPipeline, MappingReadsSkirtsAlias) {
  const nlohmann::json j = nlohmann::json::parse(R"({"classes": [
    {"name": "Background", "labels": ["Background"]},
    {"name": "LowerClothes", "labels": ["Pants", "Skirts"]},
    {"name": "UpperClothes", "labels": ["UpperClothes", "Dress", "Coat", "Jumpsuits"]},
    {"name": "MinimalClothing", "labels": ["Hat", "Hair", "Glove", "Sunglasses", "Socks", "Scarf",
      "Face", "LeftArm", "RightArm", "LeftLeg", "RightLeg", "LeftShoe", "RightShoe"]}]})");
  EXPECT_EQ(coarse_scheme_from_json(j, LabelSet::universal()).lookup(), clothing_scheme().lookup());
  nlohmann::json bad = j;
  bad["classes"][3]["labels"].erase(0);
  EXPECT_THROW(coarse_scheme_from_json(bad, LabelSet::universal()), InputError);
}

TEST(MaskPipeline, KeypointFormats) {
  const Keypoints a = keypoints_from_json(nlohmann::json::parse("[1, 2, 0.5, 3, 4, 1]"));
  const Keypoints b = keypoints_from_json(nlohmann::json::parse("[[1, 2, 0.5], [3, 4, 1]]"));
  const Keypoints c = keypoints_from_json(nlohmann::json::parse(R"({"keypoints": [1, 2, 0.5, 3, 4, 1]})"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(a(1, 1), 4.0);
  EXPECT_THROW(keypoints_from_json(nlohmann::json::parse("[1, 2]")), InputError);
}

TEST(MaskPipeline, WritesTargets) {
  LabelMask m = blank(64, 64);
  fill(m, 10, 10, 30, 30, kFace);
  fill(m, 30, 10, 50, 30, kPants);
  const SampleTargets t = build_sample_targets(m, kps({{20, 30, 1}}));
  const auto dir = std::filesystem::temp_directory_path() / "dsr_test_targets";
  std::filesystem::create_directories(dir);
  write_sample_targets(dir, "s", t);
  EXPECT_TRUE(std::filesystem::exists(dir / "s.mc.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "s.c.png"));
  std::ifstream in(dir / "s.meta.json");
  const auto meta = nlohmann::json::parse(in);
  EXPECT_EQ(meta, targets_meta(t, LabelSet::universal()));
  std::filesystem::remove_all(dir);
}

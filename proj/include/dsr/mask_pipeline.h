#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsr/labels.h"

namespace dsr {

// Inclusive pixel rectangle.
struct CropRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  bool operator==(const CropRect&) const = default;
  bool contains(int row, int col) const { return col >= x0 && col <= x1 && row >= y0 && row <= y1; }
};

// K x 3 rows of (x, y, confidence), x along columns.
using Keypoints = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// Accepts a flat [x, y, c, ...] list, a list of triplets, or an object with a
// "keypoints" member holding either.
Keypoints keypoints_from_json(const nlohmann::json& j);

struct MaskPipelineOptions {
  int crop_offset = 30;
  int min_pixels = 60;
};

struct CropResult {
  LabelMask mask;   // same size as the input; Background outside the rect
  CropRect rect;
  bool valid = false;
};

// Bounding box of keypoints with confidence > 0, grown by the offset on every
// side and clamped to the image.
CropResult crop_by_keypoints(const LabelMask& mask, const Keypoints& keypoints,
                             int offset = MaskPipelineOptions{}.crop_offset);

// Minimal-clothing labels covering at least min_pixels pixels.
std::vector<int> filter_small_labels(const LabelMask& mask,
                                     int min_pixels = MaskPipelineOptions{}.min_pixels);

BinaryMask build_mc_target(const LabelMask& mask, const std::vector<int>& valid_mc_labels);

Image<std::uint8_t> build_c_target(const LabelMask& mask,
                                   const CoarseScheme& scheme = clothing_scheme());

// Coarse scheme from {"classes": [{"name": .., "labels": [..]}, ..]}; "Skirts"
// is read as "Skirt".
CoarseScheme coarse_scheme_from_json(const nlohmann::json& j, const LabelSet& labels);

struct SampleTargets {
  std::optional<BinaryMask> mc_mask;
  std::optional<Image<std::uint8_t>> c_mask;
  std::vector<int> valid_mc_labels;
  CropRect crop;
  bool valid = false;
};

SampleTargets build_sample_targets(const LabelMask& mask, const Keypoints& keypoints,
                                   const MaskPipelineOptions& options = {});

nlohmann::json targets_meta(const SampleTargets& targets, const LabelSet& labels);

// Writes <name>.mc.png, <name>.c.png (when present) and <name>.meta.json.
void write_sample_targets(const std::filesystem::path& dir, const std::string& name,
                          const SampleTargets& targets);

}  // namespace dsr

#include "dsr/mask_pipeline.h"

#include <algorithm>
#include <cmath>

#include "dsr/image_io.h"
#include "dsr/mesh_io.h"

namespace dsr {

Keypoints keypoints_from_json(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_object() ? j.at("keypoints") : j;
  DSR_CHECK_INPUT(list.is_array(), "keypoints must be an array");
  std::vector<double> flat;
  try {
    for (const auto& item : list) {
      if (item.is_array()) {
        DSR_CHECK_INPUT(item.size() == 3, "keypoint triplets need 3 values, got {}", item.size());
        for (const auto& v : item) flat.push_back(v.get<double>());
      } else {
        flat.push_back(item.get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed keypoints: {}", e.what()));
  }
  DSR_CHECK_INPUT(flat.size() % 3 == 0, "keypoint list length {} is not a multiple of 3",
                  flat.size());
  Keypoints k(static_cast<Eigen::Index>(flat.size() / 3), 3);
  for (std::size_t i = 0; i < flat.size(); ++i) k.data()[i] = flat[i];
  DSR_CHECK_INPUT(k.allFinite(), "keypoints contain non-finite values");
  return k;
}

CropResult crop_by_keypoints(const LabelMask& mask, const Keypoints& keypoints, int offset) {
  mask.validate();
  DSR_CHECK_INPUT(offset >= 0, "crop offset must be >= 0, got {}", offset);
  CropResult out;
  out.mask = mask;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool any = false;
  for (Eigen::Index k = 0; k < keypoints.rows(); ++k) {
    if (!(keypoints(k, 2) > 0.0)) continue;
    const double x = keypoints(k, 0), y = keypoints(k, 1);
    if (!any) {
      xmin = xmax = x;
      ymin = ymax = y;
      any = true;
    }
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (!any) return out;
  const int w = mask.labels.width, h = mask.labels.height;
  const auto clamp_to = [](double v, int hi) {
    return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(hi)));
  };
  out.rect = {clamp_to(std::floor(xmin - offset), w - 1), clamp_to(std::floor(ymin - offset), h - 1),
              clamp_to(std::ceil(xmax + offset), w - 1), clamp_to(std::ceil(ymax + offset), h - 1)};
  out.valid = true;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!out.rect.contains(r, c)) out.mask.labels(r, c) = kBackground;
    }
  }
  return out;
}

std::vector<int> filter_small_labels(const LabelMask& mask, int min_pixels) {
  std::array<long, kNumLabels> count{};
  for (std::uint8_t v : mask.labels.data) {
    if (v < kNumLabels) ++count[v];
  }
  std::vector<int> valid;
  for (int l : minimal_clothing_labels()) {
    if (count[l] >= min_pixels) valid.push_back(l);
  }
  return valid;
}

BinaryMask build_mc_target(const LabelMask& mask, const std::vector<int>& valid_mc_labels) {
  std::array<bool, 256> on{};
  for (int l : valid_mc_labels) {
    DSR_CHECK_INPUT(l >= 0 && l < kNumLabels, "label {} out of range", l);
    on[l] = true;
  }
  BinaryMask g(mask.labels.width, mask.labels.height);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = on[mask.labels.data[i]] ? 1 : 0;
  return g;
}

Image<std::uint8_t> build_c_target(const LabelMask& mask, const CoarseScheme& scheme) {
  mask.validate();
  const auto table = scheme.lookup();
  Image<std::uint8_t> out(mask.labels.width, mask.labels.height);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = static_cast<std::uint8_t>(table[mask.labels.data[i]]);
  }
  return out;
}

CoarseScheme coarse_scheme_from_json(const nlohmann::json& j, const LabelSet& labels) {
  CoarseScheme s;
  try {
    for (const auto& cls : j.at("classes")) {
      s.names.push_back(cls.at("name").get<std::string>());
      auto& members = s.members.emplace_back();
      for (const auto& n : cls.at("labels")) {
        std::string name = n.get<std::string>();
        if (name == "Skirts") name = "Skirt";
        members.push_back(labels.index_of(name));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed coarse mapping: {}", e.what()));
  }
  s.validate();
  return s;
}

SampleTargets build_sample_targets(const LabelMask& mask, const Keypoints& keypoints,
                                   const MaskPipelineOptions& options) {
  DSR_CHECK_INPUT(options.min_pixels >= 0, "min_pixels must be >= 0");
  SampleTargets out;
  const CropResult crop = crop_by_keypoints(mask, keypoints, options.crop_offset);
  if (!crop.valid) return out;
  out.valid = true;
  out.crop = crop.rect;
  out.valid_mc_labels = filter_small_labels(crop.mask, options.min_pixels);
  if (!out.valid_mc_labels.empty()) out.mc_mask = build_mc_target(crop.mask, out.valid_mc_labels);
  auto c = build_c_target(crop.mask);
  if (std::any_of(c.data.begin(), c.data.end(), [](std::uint8_t v) { return v != 0; })) {
    out.c_mask = std::move(c);
  }
  return out;
}

nlohmann::json targets_meta(const SampleTargets& targets, const LabelSet& labels) {
  nlohmann::json names = nlohmann::json::array();
  for (int l : targets.valid_mc_labels) names.push_back(labels.names.at(l));
  return {{"valid", targets.valid},
          {"crop", {{"x0", targets.crop.x0}, {"y0", targets.crop.y0},
                    {"x1", targets.crop.x1}, {"y1", targets.crop.y1}}},
          {"valid_mc_labels", names},
          {"skip_mc", !targets.mc_mask.has_value()},
          {"skip_c", !targets.c_mask.has_value()}};
}

void write_sample_targets(const std::filesystem::path& dir, const std::string& name,
                          const SampleTargets& targets) {
  std::filesystem::create_directories(dir);
  if (targets.mc_mask) write_label_png(dir / (name + ".mc.png"), *targets.mc_mask);
  if (targets.c_mask) write_label_png(dir / (name + ".c.png"), *targets.c_mask);
  write_json(dir / (name + ".meta.json"), targets_meta(targets, LabelSet::universal()));
}

}  // namespace dsr

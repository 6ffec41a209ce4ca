#include "dsr/labels.h"

#include <algorithm>
#include <set>

namespace dsr {

LabelSet LabelSet::universal() {
  return {{"Background", "Hat", "Hair", "Glove", "Sunglasses", "UpperClothes", "Dress", "Coat",
           "Socks", "Pants", "Jumpsuits", "Scarf", "Skirt", "Face", "LeftArm", "RightArm",
           "LeftLeg", "RightLeg", "LeftShoe", "RightShoe"}};
}

void LabelSet::validate() const {
  DSR_CHECK_INPUT(names.size() == kNumLabels, "label set must have {} names, got {}", kNumLabels,
                  names.size());
  DSR_CHECK_INPUT(names[0] == "Background", "label 0 must be Background, got '{}'", names[0]);
  const std::set<std::string> unique(names.begin(), names.end());
  DSR_CHECK_INPUT(unique.size() == names.size(), "label names must be unique");
}

int LabelSet::index_of(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  DSR_CHECK_INPUT(it != names.end(), "unknown label '{}'", name);
  return static_cast<int>(it - names.begin());
}

const std::array<int, 5>& minimal_clothing_labels() {
  static const std::array<int, 5> labels = {kLeftArm, kRightArm, kLeftShoe, kRightShoe, kFace};
  return labels;
}

void LabelMask::validate() const {
  DSR_CHECK_INPUT(labels.width > 0 && labels.height > 0, "label mask '{}' is empty", provenance);
  DSR_CHECK_INPUT(labels.channels == 1, "label mask '{}' must have one channel", provenance);
  for (std::uint8_t v : labels.data) {
    DSR_CHECK_INPUT(v < kNumLabels, "label mask '{}' contains value {} outside [0, {})",
                    provenance, v, kNumLabels);
  }
}

void CoarseScheme::validate() const {
  DSR_CHECK_INPUT(names.size() == members.size(), "coarse scheme has {} names for {} classes",
                  names.size(), members.size());
  std::array<int, kNumLabels> seen{};
  for (const auto& group : members) {
    DSR_CHECK_INPUT(!group.empty(), "coarse class with no members");
    for (int l : group) {
      DSR_CHECK_INPUT(l >= 0 && l < kNumLabels, "fine label {} out of range", l);
      ++seen[l];
    }
  }
  for (int l = 0; l < kNumLabels; ++l) {
    DSR_CHECK_INPUT(seen[l] == 1, "fine label {} appears in {} coarse classes", l, seen[l]);
  }
}

std::array<int, kNumLabels> CoarseScheme::lookup() const {
  validate();
  std::array<int, kNumLabels> out{};
  for (int c = 0; c < size(); ++c) {
    for (int l : members[c]) out[l] = c;
  }
  return out;
}

CoarseScheme clothing_scheme() {
  return {{"Background", "LowerClothes", "UpperClothes", "MinimalClothing"},
          {{kBackground},
           {kPants, kSkirt},
           {kUpperClothes, kDress, kCoat, kJumpsuits},
           {kHat, kHair, kGlove, kSunglasses, kSocks, kScarf, kFace, kLeftArm, kRightArm,
            kLeftLeg, kRightLeg, kLeftShoe, kRightShoe}}};
}

CoarseScheme minimal_clothing_scheme(const std::vector<int>& mc_labels) {
  CoarseScheme s{{"MinimalClothing", "Other"}, {{}, {}}};
  for (int l = 0; l < kNumLabels; ++l) {
    const bool in = std::find(mc_labels.begin(), mc_labels.end(), l) != mc_labels.end();
    s.members[in ? 0 : 1].push_back(l);
  }
  return s;
}

}  // namespace dsr

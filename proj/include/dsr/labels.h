#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dsr/common.h"

namespace dsr {

inline constexpr int kNumLabels = 20;

// Fine labels of the 20-class human parsing model.
enum Label : std::uint8_t {
  kBackground = 0,
  kHat,
  kHair,
  kGlove,
  kSunglasses,
  kUpperClothes,
  kDress,
  kCoat,
  kSocks,
  kPants,
  kJumpsuits,
  kScarf,
  kSkirt,
  kFace,
  kLeftArm,
  kRightArm,
  kLeftLeg,
  kRightLeg,
  kLeftShoe,
  kRightShoe,
};

struct LabelSet {
  std::vector<std::string> names;

  static LabelSet universal();
  // Throws InputError unless there are 20 unique names with Background first.
  void validate() const;
  int index_of(std::string_view name) const;
};

// Labels whose segments roughly match the unclothed body surface.
const std::array<int, 5>& minimal_clothing_labels();

struct LabelMask {
  Image<std::uint8_t> labels;
  std::string provenance;

  void validate() const;
};

// A partition of the 20 fine labels into C coarse classes.
struct CoarseScheme {
  std::vector<std::string> names;
  std::vector<std::vector<int>> members;

  int size() const { return static_cast<int>(members.size()); }
  // Throws InputError unless every fine label belongs to exactly one class.
  void validate() const;
  // Fine label -> coarse class.
  std::array<int, kNumLabels> lookup() const;
};

inline constexpr int kCoarseBackground = 0;
inline constexpr int kCoarseLowerClothes = 1;
inline constexpr int kCoarseUpperClothes = 2;
inline constexpr int kCoarseMinimalClothing = 3;
inline constexpr std::uint8_t kIgnoreLabel = 255;

// Background / LowerClothes / UpperClothes / MinimalClothing.
CoarseScheme clothing_scheme();

// Two classes: the given minimal-clothing labels, and everything else.
CoarseScheme minimal_clothing_scheme(const std::vector<int>& mc_labels);

}  // namespace dsr

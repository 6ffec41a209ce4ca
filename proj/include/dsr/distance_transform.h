#pragma once

#include "dsr/common.h"

namespace dsr {

struct DistanceField {
  Image<double> d;          // pixels; 0 inside the mask
  BinaryMask source_mask;
  // Set when the mask had no inside pixel; d then holds the image diagonal.
  bool empty = false;
};

// Exact Euclidean distance from every pixel to the nearest nonzero pixel.
DistanceField distance_transform(const BinaryMask& mask);

}  // namespace dsr

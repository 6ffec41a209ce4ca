#pragma once

#include <vector>

#include "dsr/body_model.h"

namespace dsr {

struct HumanoidOptions {
  int sides = 8;  // vertices per cross-section ring
  int rings = 4;  // rings per limb segment, >= 2
};

// Per-vertex construction data kept alongside the generated template.
struct HumanoidInfo {
  std::vector<int> segment;         // segment id per vertex
  std::vector<int> segment_joint;   // joint driving each segment
  std::vector<double> along;        // 0 at the segment start, 1 at its end
  Vertices radial;                  // unit outward direction from the segment axis
};

// Low-poly humanoid with the 24-joint kinematic tree, skinning weights, a
// sparse joint regressor, 10 shape blendshapes and per-vertex part labels.
// Camera frame: x right, y down, z away from the viewer; the body faces -z.
BodyTemplate make_humanoid(const HumanoidOptions& options = {}, HumanoidInfo* info = nullptr);

}  // namespace dsr

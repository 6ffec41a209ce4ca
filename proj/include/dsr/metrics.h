#pragma once

#include "dsr/body_model.h"

namespace dsr {

// Millimeters, assuming mesh units are meters.
struct Metrics {
  double pa_mpjpe = 0.0;
  double mpjpe = 0.0;
  double pve = 0.0;
};

struct Similarity {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Vertices apply(const Vertices& points) const;
};

// Least-squares similarity taking `source` onto `target`.
Similarity procrustes(const Vertices& source, const Vertices& target);

// MPJPE and PVE after aligning both root joints at the origin; PA-MPJPE after
// the optimal similarity transform of the predicted joints.
Metrics evaluate(const TriangleMesh& pred, const TriangleMesh& gt, const BodyTemplate& body);

}  // namespace dsr

#pragma once

#include <algorithm>
#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dsr/common.h"

namespace dsr {

inline constexpr int kNumJoints = 24;
inline constexpr int kNumPoseParams = kNumJoints * 3;
inline constexpr int kNumShapeParams = 10;

// Weak-perspective camera: (x, y) -> scale * (x + tx, y + ty) in normalized
// image units, followed by the viewport transform.
struct Camera {
  double scale = 1.0;
  double tx = 0.0;
  double ty = 0.0;
};

struct BodyParams {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kNumPoseParams);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(kNumShapeParams);
  Camera camera;

  // Throws InputError unless theta has 72 entries, beta 10, and scale > 0.
  void validate() const;
};

// SMPL kinematic tree; parents[j] < j for every non-root joint.
const std::array<int, kNumJoints>& smpl_parents();

struct BodyTemplate {
  Vertices template_vertices;
  Faces faces;
  Eigen::SparseMatrix<double, Eigen::RowMajor> joint_regressor;  // J x V
  RowMatrix skin_weights;                                        // V x J
  // Shape blendshapes stored as V x 30, entry (v, 3 * k + axis).
  RowMatrix shape_dirs;
  std::vector<int> part_labels;
  std::vector<int> parents;

  int num_vertices() const { return static_cast<int>(template_vertices.rows()); }
  int num_joints() const { return static_cast<int>(parents.size()); }
  int num_shape() const { return static_cast<int>(shape_dirs.cols() / 3); }

  // Checks every structural invariant; throws InputError describing the first
  // violation.
  void validate() const;
};

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle);

// Derivatives of the rotation matrix w.r.t. each axis-angle component.
std::array<Eigen::Matrix3d, 3> rodrigues_jacobian(const Eigen::Vector3d& axis_angle);

// Intermediate quantities kept for the reverse pass.
struct BodyForwardState {
  Vertices shaped;                        // rest mesh after shape blendshapes
  Vertices rest_joints;                   // J x 3, from the shaped mesh
  std::vector<Eigen::Matrix3d> local;     // per-joint rodrigues(theta_j)
  std::vector<Eigen::Matrix3d> global;    // accumulated rotations
  std::vector<Eigen::Vector3d> offset;    // translation minus rest joint
  TriangleMesh mesh;
};

TriangleMesh forward(const BodyTemplate& body, const BodyParams& params);
BodyForwardState forward_with_state(const BodyTemplate& body, const BodyParams& params);

struct BodyGradient {
  Eigen::VectorXd theta;
  Eigen::VectorXd beta;
};

// Pulls a V x 3 cotangent on the posed vertices back to theta and beta.
BodyGradient forward_vjp(const BodyTemplate& body, const BodyParams& params,
                         const BodyForwardState& state, const Vertices& d_vertices);

// Image-space mapping shared by projection and rasterization.
struct Viewport {
  int width = 0;
  int height = 0;

  double half_extent() const { return 0.5 * std::min(width, height); }
  double center_x() const { return 0.5 * width; }
  double center_y() const { return 0.5 * height; }
};

// Weak-perspective projection to pixel coordinates (x right, y down, origin at
// the top-left image corner).
Points2 project(const Vertices& points, const Camera& camera, const Viewport& viewport);

struct ProjectionGradient {
  Vertices d_points;
  Eigen::Vector3d d_camera = Eigen::Vector3d::Zero();  // (scale, tx, ty)
};

ProjectionGradient project_vjp(const Vertices& points, const Camera& camera,
                               const Viewport& viewport, const Points2& d_pixels);

Vertices regress_joints(const TriangleMesh& mesh, const BodyTemplate& body);

// Transposed regressor applied to a J x 3 cotangent.
Vertices regress_joints_vjp(const BodyTemplate& body, const Vertices& d_joints);

}  // namespace dsr

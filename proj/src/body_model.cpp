#include "dsr/body_model.h"

#include <cmath>

namespace dsr {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d k;
  k << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return k;
}

// Coefficients of R = I + a K + b K^2 and their radial derivatives divided by
// the angle. Series expansions below 1e-2 keep everything accurate to machine
// precision near the identity.
struct RodriguesCoeffs {
  double a, b, da, db;
};

RodriguesCoeffs rodrigues_coeffs(double angle) {
  const double t2 = angle * angle;
  if (angle < 1e-2) {
    const double t4 = t2 * t2;
    const double t6 = t4 * t2;
    return {1.0 - t2 / 6.0 + t4 / 120.0 - t6 / 5040.0,
            0.5 - t2 / 24.0 + t4 / 720.0 - t6 / 40320.0,
            -1.0 / 3.0 + t2 / 30.0 - t4 / 840.0 + t6 / 45360.0,
            -1.0 / 12.0 + t2 / 180.0 - t4 / 6720.0 + t6 / 453600.0};
  }
  const double s = std::sin(angle);
  const double c = std::cos(angle);
  return {s / angle, (1.0 - c) / t2, (angle * c - s) / (t2 * angle),
          (angle * s - 2.0 * (1.0 - c)) / (t2 * t2)};
}

}  // namespace

void BodyParams::validate() const {
  DSR_CHECK_INPUT(theta.size() == kNumPoseParams, "theta must have {} entries, got {}",
                  kNumPoseParams, theta.size());
  DSR_CHECK_INPUT(beta.size() == kNumShapeParams, "beta must have {} entries, got {}",
                  kNumShapeParams, beta.size());
  DSR_CHECK_INPUT(camera.scale > 0.0, "camera scale must be positive, got {}", camera.scale);
  DSR_CHECK_INPUT(theta.allFinite() && beta.allFinite() && std::isfinite(camera.tx) &&
                      std::isfinite(camera.ty) && std::isfinite(camera.scale),
                  "body parameters contain non-finite values");
}

const std::array<int, kNumJoints>& smpl_parents() {
  static const std::array<int, kNumJoints> parents = {
      -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
  return parents;
}

void BodyTemplate::validate() const {
  const int nv = num_vertices();
  const int nj = num_joints();
  DSR_CHECK_INPUT(nv > 0, "template has no vertices");
  DSR_CHECK_INPUT(nj > 0, "template has no joints");
  DSR_CHECK_INPUT(parents[0] == -1, "joint 0 must be the root");
  for (int j = 1; j < nj; ++j) {
    DSR_CHECK_INPUT(parents[j] >= 0 && parents[j] < j,
                    "parent of joint {} must precede it, got {}", j, parents[j]);
  }
  for (int f = 0; f < faces.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      DSR_CHECK_INPUT(faces(f, k) >= 0 && faces(f, k) < nv,
                      "face {} references vertex {} outside [0, {})", f, faces(f, k), nv);
    }
    DSR_CHECK_INPUT(faces(f, 0) != faces(f, 1) && faces(f, 1) != faces(f, 2) &&
                        faces(f, 0) != faces(f, 2),
                    "face {} is degenerate", f);
  }
  DSR_CHECK_INPUT(skin_weights.rows() == nv && skin_weights.cols() == nj,
                  "skin weights must be {}x{}, got {}x{}", nv, nj, skin_weights.rows(),
                  skin_weights.cols());
  for (int v = 0; v < nv; ++v) {
    DSR_CHECK_INPUT(skin_weights.row(v).minCoeff() >= 0.0, "vertex {} has negative skin weight", v);
    DSR_CHECK_INPUT(std::abs(skin_weights.row(v).sum() - 1.0) <= 1e-6,
                    "skin weights of vertex {} sum to {}", v, skin_weights.row(v).sum());
  }
  DSR_CHECK_INPUT(joint_regressor.rows() == nj && joint_regressor.cols() == nv,
                  "joint regressor must be {}x{}, got {}x{}", nj, nv, joint_regressor.rows(),
                  joint_regressor.cols());
  for (int j = 0; j < nj; ++j) {
    double sum = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(joint_regressor, j); it; ++it) {
      sum += it.value();
    }
    DSR_CHECK_INPUT(std::abs(sum - 1.0) <= 1e-6, "joint regressor row {} sums to {}", j, sum);
  }
  DSR_CHECK_INPUT(shape_dirs.rows() == nv && shape_dirs.cols() % 3 == 0,
                  "shape blendshapes must be {}x(3K), got {}x{}", nv, shape_dirs.rows(),
                  shape_dirs.cols());
  DSR_CHECK_INPUT(part_labels.empty() || static_cast<int>(part_labels.size()) == nv,
                  "part labels must have {} entries, got {}", nv, part_labels.size());
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle) {
  const RodriguesCoeffs c = rodrigues_coeffs(axis_angle.norm());
  const Eigen::Matrix3d k = skew(axis_angle);
  return Eigen::Matrix3d::Identity() + c.a * k + c.b * (k * k);
}

std::array<Eigen::Matrix3d, 3> rodrigues_jacobian(const Eigen::Vector3d& axis_angle) {
  const RodriguesCoeffs c = rodrigues_coeffs(axis_angle.norm());
  const Eigen::Matrix3d k = skew(axis_angle);
  const Eigen::Matrix3d k2 = k * k;
  std::array<Eigen::Matrix3d, 3> out;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix3d e = skew(Eigen::Vector3d::Unit(i));
    out[i] = c.a * e + c.b * (e * k + k * e) + (c.da * axis_angle[i]) * k +
             (c.db * axis_angle[i]) * k2;
  }
  return out;
}

BodyForwardState forward_with_state(const BodyTemplate& body, const BodyParams& params) {
  params.validate();
  const int nv = body.num_vertices();
  const int nj = body.num_joints();
  DSR_CHECK_INPUT(nj == kNumJoints, "template has {} joints, body parameters drive {}", nj,
                  kNumJoints);
  DSR_CHECK_INPUT(body.num_shape() == params.beta.size(),
                  "template has {} shape blendshapes, parameters have {}", body.num_shape(),
                  params.beta.size());

  BodyForwardState st;
  st.shaped = body.template_vertices;
  for (int k = 0; k < body.num_shape(); ++k) {
    const double bk = params.beta[k];
    if (bk == 0.0) continue;
    st.shaped += bk * body.shape_dirs.middleCols(3 * k, 3);
  }
  st.rest_joints = body.joint_regressor * st.shaped;

  st.local.resize(nj);
  st.global.resize(nj);
  st.offset.resize(nj);
  for (int j = 0; j < nj; ++j) {
    st.local[j] = rodrigues(params.theta.segment<3>(3 * j));
    const int p = body.parents[j];
    if (p < 0) {
      st.global[j] = st.local[j];
      st.offset[j].setZero();
    } else {
      st.global[j] = st.global[p] * st.local[j];
      const Eigen::Vector3d bone = (st.rest_joints.row(j) - st.rest_joints.row(p)).transpose();
      st.offset[j] = st.offset[p] + (st.global[p] - Eigen::Matrix3d::Identity()) * bone;
    }
  }

  std::vector<Eigen::Matrix3d> rel(nj);
  for (int j = 0; j < nj; ++j) rel[j] = st.global[j] - Eigen::Matrix3d::Identity();

  st.mesh.faces = body.faces;
  st.mesh.vertices.resize(nv, 3);
  for (int v = 0; v < nv; ++v) {
    const Eigen::Vector3d s = st.shaped.row(v).transpose();
    Eigen::Vector3d delta = Eigen::Vector3d::Zero();
    for (int j = 0; j < nj; ++j) {
      const double w = body.skin_weights(v, j);
      if (w == 0.0) continue;
      delta += w * (rel[j] * (s - st.rest_joints.row(j).transpose()) + st.offset[j]);
    }
    st.mesh.vertices.row(v) = (s + delta).transpose();
  }
  return st;
}

TriangleMesh forward(const BodyTemplate& body, const BodyParams& params) {
  return forward_with_state(body, params).mesh;
}

BodyGradient forward_vjp(const BodyTemplate& body, const BodyParams& params,
                         const BodyForwardState& st, const Vertices& d_vertices) {
  const int nv = body.num_vertices();
  const int nj = body.num_joints();
  DSR_CHECK_INPUT(d_vertices.rows() == nv, "vertex cotangent has {} rows, expected {}",
                  d_vertices.rows(), nv);

  Vertices d_shaped = d_vertices;
  Vertices d_joints = Vertices::Zero(nj, 3);
  std::vector<Eigen::Matrix3d> d_rot(nj, Eigen::Matrix3d::Zero());
  std::vector<Eigen::Vector3d> d_offset(nj, Eigen::Vector3d::Zero());

  std::vector<Eigen::Matrix3d> rel(nj);
  for (int j = 0; j < nj; ++j) rel[j] = st.global[j] - Eigen::Matrix3d::Identity();

  for (int v = 0; v < nv; ++v) {
    const Eigen::Vector3d g = d_vertices.row(v).transpose();
    const Eigen::Vector3d s = st.shaped.row(v).transpose();
    for (int j = 0; j < nj; ++j) {
      const double w = body.skin_weights(v, j);
      if (w == 0.0) continue;
      const Eigen::Vector3d local = s - st.rest_joints.row(j).transpose();
      const Eigen::Vector3d back = w * (rel[j].transpose() * g);
      d_rot[j] += (w * g) * local.transpose();
      d_shaped.row(v) += back.transpose();
      d_joints.row(j) -= back.transpose();
      d_offset[j] += w * g;
    }
  }

  // Children have larger indices, so a reverse sweep sees complete gradients.
  std::vector<Eigen::Matrix3d> d_local(nj, Eigen::Matrix3d::Zero());
  for (int j = nj - 1; j >= 0; --j) {
    const int p = body.parents[j];
    if (p < 0) {
      d_local[j] = d_rot[j];
      continue;
    }
    const Eigen::Vector3d bone = (st.rest_joints.row(j) - st.rest_joints.row(p)).transpose();
    d_offset[p] += d_offset[j];
    d_rot[p] += d_offset[j] * bone.transpose();
    const Eigen::Vector3d back = rel[p].transpose() * d_offset[j];
    d_joints.row(j) += back.transpose();
    d_joints.row(p) -= back.transpose();

    d_rot[p] += d_rot[j] * st.local[j].transpose();
    d_local[j] = st.global[p].transpose() * d_rot[j];
  }

  BodyGradient out;
  out.theta = Eigen::VectorXd::Zero(3 * nj);
  for (int j = 0; j < nj; ++j) {
    const auto jac = rodrigues_jacobian(params.theta.segment<3>(3 * j));
    for (int i = 0; i < 3; ++i) out.theta[3 * j + i] = d_local[j].cwiseProduct(jac[i]).sum();
  }

  d_shaped += body.joint_regressor.transpose() * d_joints;
  out.beta = Eigen::VectorXd::Zero(body.num_shape());
  for (int k = 0; k < body.num_shape(); ++k) {
    out.beta[k] = body.shape_dirs.middleCols(3 * k, 3).cwiseProduct(d_shaped).sum();
  }
  return out;
}

Points2 project(const Vertices& points, const Camera& camera, const Viewport& viewport) {
  DSR_CHECK_INPUT(camera.scale > 0.0, "camera scale must be positive, got {}", camera.scale);
  const double half = viewport.half_extent();
  const double cx = viewport.center_x();
  const double cy = viewport.center_y();
  Points2 out(points.rows(), 2);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out(i, 0) = cx + half * camera.scale * (points(i, 0) + camera.tx);
    out(i, 1) = cy + half * camera.scale * (points(i, 1) + camera.ty);
  }
  return out;
}

ProjectionGradient project_vjp(const Vertices& points, const Camera& camera,
                               const Viewport& viewport, const Points2& d_pixels) {
  DSR_CHECK_INPUT(d_pixels.rows() == points.rows(), "pixel cotangent has {} rows, expected {}",
                  d_pixels.rows(), points.rows());
  const double half = viewport.half_extent();
  ProjectionGradient out;
  out.d_points = Vertices::Zero(points.rows(), 3);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double gx = d_pixels(i, 0);
    const double gy = d_pixels(i, 1);
    out.d_points(i, 0) = half * camera.scale * gx;
    out.d_points(i, 1) = half * camera.scale * gy;
    out.d_camera[0] += half * ((points(i, 0) + camera.tx) * gx + (points(i, 1) + camera.ty) * gy);
    out.d_camera[1] += half * camera.scale * gx;
    out.d_camera[2] += half * camera.scale * gy;
  }
  return out;
}

Vertices regress_joints(const TriangleMesh& mesh, const BodyTemplate& body) {
  DSR_CHECK_INPUT(mesh.vertices.rows() == body.joint_regressor.cols(),
                  "mesh has {} vertices, joint regressor expects {}", mesh.vertices.rows(),
                  body.joint_regressor.cols());
  return body.joint_regressor * mesh.vertices;
}

Vertices regress_joints_vjp(const BodyTemplate& body, const Vertices& d_joints) {
  DSR_CHECK_INPUT(d_joints.rows() == body.joint_regressor.rows(),
                  "joint cotangent has {} rows, expected {}", d_joints.rows(),
                  body.joint_regressor.rows());
  return body.joint_regressor.transpose() * d_joints;
}

}  // namespace dsr

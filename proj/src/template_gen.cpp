#include "dsr/template_gen.h"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

namespace dsr {

namespace {

// Rest joints given y-up, z-forward, then flipped into the camera frame.
Eigen::Vector3d joint_position(int j) {
  static const double table[kNumJoints][3] = {
      {0.00, 0.00, 0.00},    {0.07, -0.08, 0.00},   {-0.07, -0.08, 0.00},  {0.00, 0.11, -0.01},
      {0.10, -0.48, 0.01},   {-0.10, -0.48, 0.01},  {0.00, 0.25, 0.00},    {0.09, -0.88, -0.03},
      {-0.09, -0.88, -0.03}, {0.00, 0.31, 0.01},    {0.11, -0.94, 0.10},   {-0.11, -0.94, 0.10},
      {0.00, 0.52, -0.01},   {0.07, 0.43, 0.00},    {-0.07, 0.43, 0.00},   {0.00, 0.60, 0.03},
      {0.18, 0.45, -0.01},   {-0.18, 0.45, -0.01},  {0.43, 0.45, -0.02},   {-0.43, 0.45, -0.02},
      {0.68, 0.45, 0.00},    {-0.68, 0.45, 0.00},   {0.76, 0.45, 0.00},    {-0.76, 0.45, 0.00}};
  return {table[j][0], -table[j][1], -table[j][2]};
}

struct Segment {
  int joint;              // start joint; drives the segment
  int end_joint;          // -1 for open-ended segments
  Eigen::Vector3d extent; // end offset from the start joint when end_joint < 0
  double r0x, r0z, r1x, r1z;
};

std::vector<Segment> segments() {
  const Eigen::Vector3d up(0, -1, 0), fwd(0, 0, -1), left(1, 0, 0);
  std::vector<Segment> s = {
      {0, 3, {}, 0.15, 0.10, 0.14, 0.10},
      {3, 6, {}, 0.14, 0.10, 0.15, 0.10},
      {6, 9, {}, 0.15, 0.10, 0.16, 0.10},
      {9, 12, {}, 0.16, 0.10, 0.07, 0.06},
      {12, 15, {}, 0.05, 0.05, 0.05, 0.05},
      {15, -1, 0.22 * up, 0.09, 0.10, 0.07, 0.08},
  };
  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    s.push_back({1 + side, 4 + side, {}, 0.08, 0.08, 0.055, 0.055});
    s.push_back({4 + side, 7 + side, {}, 0.055, 0.055, 0.04, 0.04});
    s.push_back({7 + side, 10 + side, {}, 0.04, 0.04, 0.04, 0.035});
    s.push_back({10 + side, -1, 0.08 * fwd, 0.04, 0.03, 0.03, 0.02});
    s.push_back({13 + side, 16 + side, {}, 0.05, 0.05, 0.05, 0.05});
    s.push_back({16 + side, 18 + side, {}, 0.05, 0.05, 0.04, 0.04});
    s.push_back({18 + side, 20 + side, {}, 0.04, 0.04, 0.03, 0.03});
    s.push_back({20 + side, 22 + side, {}, 0.03, 0.02, 0.04, 0.015});
    s.push_back({22 + side, -1, 0.08 * sx * left, 0.04, 0.015, 0.03, 0.01});
  }
  return s;
}

bool is_leg(int j) {
  return j == 1 || j == 2 || j == 4 || j == 5 || j == 7 || j == 8 || j == 10 || j == 11;
}
bool is_arm(int j) { return j >= 13 && j != 15; }
bool is_torso(int j) { return j == 0 || j == 3 || j == 6 || j == 9; }
bool is_head(int j) { return j == 12 || j == 15; }

}  // namespace

BodyTemplate make_humanoid(const HumanoidOptions& options, HumanoidInfo* info) {
  DSR_CHECK_INPUT(options.sides >= 3 && options.rings >= 2,
                  "humanoid needs >= 3 sides and >= 2 rings, got {} and {}", options.sides,
                  options.rings);
  const auto& parents = smpl_parents();
  const auto segs = segments();
  const int per_seg = options.sides * options.rings + 2;
  const int nv = per_seg * static_cast<int>(segs.size());

  BodyTemplate body;
  body.parents.assign(parents.begin(), parents.end());
  body.template_vertices.resize(nv, 3);
  body.skin_weights = RowMatrix::Zero(nv, kNumJoints);
  body.part_labels.assign(nv, 0);
  HumanoidInfo local;
  HumanoidInfo& inf = info ? *info : local;
  inf.segment.assign(nv, 0);
  inf.segment_joint.assign(nv, 0);
  inf.along.assign(nv, 0.0);
  inf.radial = Vertices::Zero(nv, 3);

  std::vector<Eigen::Vector3i> faces;
  std::vector<Eigen::Triplet<double>> regressor;
  constexpr double kBlend = 0.3;

  for (int si = 0; si < static_cast<int>(segs.size()); ++si) {
    const Segment& sg = segs[si];
    const Eigen::Vector3d a = joint_position(sg.joint);
    const Eigen::Vector3d b = sg.end_joint >= 0 ? joint_position(sg.end_joint) : a + sg.extent;
    const Eigen::Vector3d axis = (b - a).normalized();
    Eigen::Vector3d depth = Eigen::Vector3d::UnitZ() - axis.z() * axis;
    if (depth.norm() < 0.3) depth = Eigen::Vector3d::UnitY() - axis.y() * axis;
    depth.normalize();
    const Eigen::Vector3d side = axis.cross(depth).normalized();
    const int base = si * per_seg;
    const int parent = parents[sg.joint];

    auto set_vertex = [&](int v, const Eigen::Vector3d& pos, double t, const Eigen::Vector3d& radial) {
      body.template_vertices.row(v) = pos.transpose();
      inf.segment[v] = si;
      inf.segment_joint[v] = sg.joint;
      inf.along[v] = t;
      inf.radial.row(v) = radial.transpose();
      body.part_labels[v] = sg.joint;
      double wp = 0.0, wc = 0.0;
      if (parent >= 0 && t < kBlend) wp = 0.5 * (1.0 - t / kBlend);
      if (sg.end_joint >= 0 && t > 1.0 - kBlend) wc = 0.5 * (t - (1.0 - kBlend)) / kBlend;
      if (wp > 0.0) body.skin_weights(v, parent) = wp;
      if (wc > 0.0) body.skin_weights(v, sg.end_joint) = wc;
      body.skin_weights(v, sg.joint) = 1.0 - wp - wc;
    };

    for (int r = 0; r < options.rings; ++r) {
      const double t = static_cast<double>(r) / (options.rings - 1);
      const double rx = sg.r0x + t * (sg.r1x - sg.r0x);
      const double rz = sg.r0z + t * (sg.r1z - sg.r0z);
      const Eigen::Vector3d center = a + t * (b - a);
      for (int k = 0; k < options.sides; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / options.sides;
        const Eigen::Vector3d radial = std::cos(phi) * side + std::sin(phi) * depth;
        const Eigen::Vector3d pos =
            center + rx * std::cos(phi) * side + rz * std::sin(phi) * depth;
        set_vertex(base + r * options.sides + k, pos, t, radial);
      }
    }
    const int cap0 = base + options.sides * options.rings;
    const int cap1 = cap0 + 1;
    set_vertex(cap0, a, 0.0, -axis);
    set_vertex(cap1, b, 1.0, axis);

    // Regress the start joint from the first ring and its cap centre.
    const double w = 1.0 / (options.sides + 1);
    for (int k = 0; k < options.sides; ++k) regressor.emplace_back(sg.joint, base + k, w);
    regressor.emplace_back(sg.joint, cap0, w);

    auto ring = [&](int r, int k) { return base + r * options.sides + (k % options.sides); };
    auto push_outward = [&](int i0, int i1, int i2, const Eigen::Vector3d& outward) {
      const Eigen::Vector3d p0 = body.template_vertices.row(i0).transpose();
      const Eigen::Vector3d n = (body.template_vertices.row(i1).transpose() - p0)
                                    .cross(body.template_vertices.row(i2).transpose() - p0);
      if (n.dot(outward) >= 0.0) {
        faces.emplace_back(i0, i1, i2);
      } else {
        faces.emplace_back(i0, i2, i1);
      }
    };
    for (int r = 0; r + 1 < options.rings; ++r) {
      for (int k = 0; k < options.sides; ++k) {
        const Eigen::Vector3d c0 = body.template_vertices.row(ring(r, k)).transpose();
        const Eigen::Vector3d c1 = body.template_vertices.row(ring(r + 1, k + 1)).transpose();
        const Eigen::Vector3d mid = 0.5 * (c0 + c1);
        const Eigen::Vector3d center = a + (0.5 * (r + r + 1) / (options.rings - 1)) * (b - a);
        Eigen::Vector3d out = mid - center;
        out -= out.dot(axis) * axis;
        push_outward(ring(r, k), ring(r + 1, k), ring(r + 1, k + 1), out);
        push_outward(ring(r, k), ring(r + 1, k + 1), ring(r, k + 1), out);
      }
    }
    for (int k = 0; k < options.sides; ++k) {
      push_outward(cap0, ring(0, k), ring(0, k + 1), -axis);
      push_outward(cap1, ring(options.rings - 1, k), ring(options.rings - 1, k + 1), axis);
    }
  }

  body.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t f = 0; f < faces.size(); ++f) body.faces.row(static_cast<Eigen::Index>(f)) = faces[f].transpose();
  body.joint_regressor.resize(kNumJoints, nv);
  body.joint_regressor.setFromTriplets(regressor.begin(), regressor.end());

  // Shape blendshapes, in metres per unit coefficient.
  const double pelvis_y = joint_position(0).y();
  const double ankle_y = joint_position(7).y();
  body.shape_dirs = RowMatrix::Zero(nv, 3 * kNumShapeParams);
  for (int v = 0; v < nv; ++v) {
    const Eigen::Vector3d p = body.template_vertices.row(v).transpose();
    const Eigen::Vector3d rad = inf.radial.row(v).transpose();
    const int j = inf.segment_joint[v];
    const double sx = p.x() >= 0.0 ? 1.0 : -1.0;
    Eigen::Matrix<double, 3, kNumShapeParams> d = Eigen::Matrix<double, 3, kNumShapeParams>::Zero();
    d.col(0) = 0.04 * p;                                          // stature
    d.col(1) = 0.015 * rad;                                       // overall girth
    if (is_leg(j)) {
      const double frac = std::clamp((p.y() - pelvis_y) / (ankle_y - pelvis_y), 0.0, 1.2);
      d(1, 2) = 0.04 * frac;                                      // leg length
      d.col(9) = 0.01 * rad;                                      // limb girth
    }
    if (is_arm(j)) {
      const double frac = std::clamp((std::abs(p.x()) - 0.07) / 0.69, 0.0, 1.2);
      d(0, 3) = 0.04 * sx * frac;                                 // arm length
      d(0, 6) = 0.03 * sx;                                        // shoulder width
      d.col(9) = 0.01 * rad;
    }
    if (is_torso(j)) {
      d(0, 4) = 0.02 * rad.x();                                   // torso width
      d(2, 5) = rad.z() < 0.0 ? 0.025 * rad.z() : 0.0;            // belly
    }
    if (is_head(j)) d.col(7) = 0.02 * rad;                        // head size
    if (j == 1 || j == 2 || (j == 0 && inf.along[v] < 0.5)) d(0, 8) = 0.02 * sx;  // hip width
    for (int k = 0; k < kNumShapeParams; ++k) body.shape_dirs.block<1, 3>(v, 3 * k) = d.col(k).transpose();
  }
  body.validate();
  return body;
}

}  // namespace dsr

#pragma once

// Slow reference implementations. Nothing here calls into the code it checks
// except plain data types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "dsr/body_model.h"
#include "dsr/common.h"
#include "dsr/labels.h"
#include "dsr/semantic_prior.h"
#include "dsr/soft_raster.h"

namespace oracle {

using namespace dsr;

inline Eigen::Vector2d project_point(const Eigen::Vector3d& p, const Camera& cam, int w, int h) {
  const double half = 0.5 * std::min(w, h);
  return {0.5 * w + half * cam.scale * (p.x() + cam.tx), 0.5 * h + half * cam.scale * (p.y() + cam.ty)};
}

inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

inline Eigen::Matrix3d rodrigues_quat(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle)).toRotationMatrix();
}

// Homogeneous-transform skinning, one vertex at a time.
inline Vertices lbs_loop(const BodyTemplate& body, const BodyParams& params) {
  const int nv = body.num_vertices();
  const int nj = body.num_joints();
  Eigen::MatrixXd shaped(nv, 3);
  for (int v = 0; v < nv; ++v) {
    for (int a = 0; a < 3; ++a) {
      double s = body.template_vertices(v, a);
      for (int k = 0; k < body.num_shape(); ++k) s += params.beta[k] * body.shape_dirs(v, 3 * k + a);
      shaped(v, a) = s;
    }
  }
  const Eigen::MatrixXd dense_reg = Eigen::MatrixXd(body.joint_regressor);
  const Eigen::MatrixXd joints = dense_reg * shaped;
  std::vector<Eigen::Matrix4d> world(nj);
  for (int j = 0; j < nj; ++j) {
    Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
    local.topLeftCorner<3, 3>() = rodrigues_quat(params.theta.segment<3>(3 * j));
    const int p = body.parents[j];
    if (p < 0) {
      local.topRightCorner<3, 1>() = joints.row(j).transpose();
      world[j] = local;
    } else {
      local.topRightCorner<3, 1>() = (joints.row(j) - joints.row(p)).transpose();
      world[j] = world[p] * local;
    }
  }
  Vertices out(nv, 3);
  for (int v = 0; v < nv; ++v) {
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (int j = 0; j < nj; ++j) {
      Eigen::Vector4d rel;
      rel << (shaped.row(v) - joints.row(j)).transpose(), 1.0;
      acc += body.skin_weights(v, j) * (world[j] * rel);
    }
    out.row(v) = acc.head<3>().transpose();
  }
  return out;
}

inline bool front_facing(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  return cross2(b - a, c - a) < -1e-12;
}

// Hard raster: point-in-triangle and interpolated depth for every face at
// every pixel; nearest wins, ties keep the lower face index.
inline Image<int> hard_raster(const TriangleMesh& mesh, const Camera& cam, int w, int h) {
  Image<int> out(w, h, 1, kNoFace);
  std::vector<Eigen::Vector2d> px(mesh.vertices.rows());
  for (Eigen::Index v = 0; v < mesh.vertices.rows(); ++v)
    px[v] = project_point(mesh.vertices.row(v).transpose(), cam, w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Eigen::Vector2d q(c + 0.5, r + 0.5);
      double best = std::numeric_limits<double>::infinity();
      for (int f = 0; f < mesh.faces.rows(); ++f) {
        const Eigen::Vector2d a = px[mesh.faces(f, 0)], b = px[mesh.faces(f, 1)], d = px[mesh.faces(f, 2)];
        if (!front_facing(a, b, d)) continue;
        const double area = cross2(b - a, d - a);
        const double l0 = cross2(b - q, d - q) / area;
        const double l1 = cross2(d - q, a - q) / area;
        const double l2 = cross2(a - q, b - q) / area;
        if (l0 < 0 || l1 < 0 || l2 < 0) continue;
        const double z = l0 * mesh.vertices(mesh.faces(f, 0), 2) + l1 * mesh.vertices(mesh.faces(f, 1), 2) +
                         l2 * mesh.vertices(mesh.faces(f, 2), 2);
        if (z < best) {
          best = z;
          out(r, c) = f;
        }
      }
    }
  }
  return out;
}

inline double seg_dist2(const Eigen::Vector2d& q, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d e = b - a;
  const double u = std::clamp((q - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
  return (q - a - u * e).squaredNorm();
}

// Soft raster straight from the definition: no tiles, no cutoff, plain
// exponentials normalised per pixel.
inline Image<double> soft_raster(const TriangleMesh& mesh, const RowMatrix& attr, const Camera& cam,
                                 const RasterConfig& cfg) {
  const int w = cfg.width, h = cfg.height, nc = static_cast<int>(attr.cols());
  const double half = 0.5 * std::min(w, h);
  Image<double> out(w, h, nc);
  std::vector<Eigen::Vector2d> px(mesh.vertices.rows());
  for (Eigen::Index v = 0; v < mesh.vertices.rows(); ++v)
    px[v] = project_point(mesh.vertices.row(v).transpose(), cam, w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Eigen::Vector2d q(c + 0.5, r + 0.5);
      double norm = 1.0;  // background: exp(0 / gamma)
      std::vector<double> acc(nc, 0.0);
      for (int ch = 0; ch < nc; ++ch)
        acc[ch] = ch < static_cast<int>(cfg.background_value.size()) ? cfg.background_value[ch] : 0.0;
      for (int f = 0; f < mesh.faces.rows(); ++f) {
        const int i[3] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
        const Eigen::Vector2d a = px[i[0]], b = px[i[1]], d = px[i[2]];
        if (!front_facing(a, b, d)) continue;
        const double area = cross2(b - a, d - a);
        double l[3] = {cross2(b - q, d - q) / area, cross2(d - q, a - q) / area, cross2(a - q, b - q) / area};
        const bool inside = l[0] >= 0 && l[1] >= 0 && l[2] >= 0;
        const double dist2 = std::min({seg_dist2(q, a, b), seg_dist2(q, b, d), seg_dist2(q, d, a)}) / (half * half);
        const double t = (inside ? 1.0 : -1.0) * dist2 / cfg.sigma;
        const double cover = 1.0 / (1.0 + std::exp(-t));
        double s = 0;
        for (double& x : l) {
          x = std::max(x, 0.0);
          s += x;
        }
        double z = 0;
        for (int k = 0; k < 3; ++k) {
          l[k] /= s;
          z += l[k] * mesh.vertices(i[k], 2);
        }
        const double zbar = std::clamp((cfg.far - z) / (cfg.far - cfg.near), 0.0, 1.0);
        const double wgt = cover * std::exp(zbar / cfg.gamma);
        norm += wgt;
        for (int ch = 0; ch < nc; ++ch) {
          double col = 0;
          for (int k = 0; k < 3; ++k) col += l[k] * attr(i[k], ch);
          acc[ch] += wgt * col;
        }
      }
      for (int ch = 0; ch < nc; ++ch) out(r, c, ch) = acc[ch] / norm;
    }
  }
  return out;
}

// Distance from every pixel to the nearest inside pixel.
inline Image<double> distance_brute(const BinaryMask& g) {
  Image<double> d(g.width, g.height, 1, std::numeric_limits<double>::infinity());
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c)
      for (int rr = 0; rr < g.height; ++rr)
        for (int cc = 0; cc < g.width; ++cc)
          if (g(rr, cc)) d(r, c) = std::min(d(r, c), std::sqrt(double((r - rr) * (r - rr) + (c - cc) * (c - cc))));
  return d;
}

inline double soft_distm(const Image<double>& rimg, const Image<double>& d) {
  double num = 0, den = 0;
  for (int r = 0; r < rimg.height; ++r)
    for (int c = 0; c < rimg.width; ++c) {
      num += rimg(r, c) * d(r, c);
      den += rimg(r, c);
    }
  return num / std::pow(den, 1.5);
}

inline double soft_iou_loss(const Image<double>& p, const BinaryMask& g) {
  double inter = 0, uni = 0;
  for (int r = 0; r < p.height; ++r)
    for (int c = 0; c < p.width; ++c) {
      const double gv = g(r, c) ? 1.0 : 0.0;
      inter += p(r, c) * gv;
      uni += p(r, c) + gv - p(r, c) * gv;
    }
  return 1.0 - inter / uni;
}

inline double c_nll(const Image<double>& ch, const Image<std::uint8_t>& target, const BinaryMask& sil,
                    bool sum_reduction) {
  double total = 0;
  int n = 0;
  for (int r = 0; r < ch.height; ++r)
    for (int c = 0; c < ch.width; ++c) {
      if (!sil(r, c) || target(r, c) == kIgnoreLabel) continue;
      double z = 0;
      for (int k = 0; k < ch.channels; ++k) z += std::max(ch(r, c, k), 1e-8);
      total -= std::log(std::max(ch(r, c, target(r, c)), 1e-8) / z);
      ++n;
    }
  return sum_reduction || n == 0 ? total : total / n;
}

// Per-pixel counting: every covered pixel adds its label to the three
// vertices of the face that owns it.
inline CountMatrix counts(const ScanObservation& obs) {
  const auto& img = obs.label_image.labels;
  const Image<int> faces = hard_raster(obs.mesh, obs.camera, img.width, img.height);
  CountMatrix m = CountMatrix::Zero(obs.mesh.vertices.rows(), kNumLabels);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const int f = faces(r, c);
      if (f == kNoFace) continue;
      for (int k = 0; k < 3; ++k) m(obs.mesh.faces(f, k), img(r, c)) += 1;
    }
  return m;
}

struct HornResult {
  double scale;
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;
};

// Horn's closed form: rotation from the top eigenvector of the 4x4 quaternion
// matrix, then the scale and translation that follow from it.
inline HornResult horn(const Vertices& src, const Vertices& dst) {
  const Eigen::RowVector3d ms = src.colwise().mean(), md = dst.colwise().mean();
  const Eigen::MatrixXd a = src.rowwise() - ms, b = dst.rowwise() - md;
  const Eigen::Matrix3d s = a.transpose() * b;
  const double sxx = s(0, 0), sxy = s(0, 1), sxz = s(0, 2), syx = s(1, 0), syy = s(1, 1), syz = s(1, 2),
               szx = s(2, 0), szy = s(2, 1), szz = s(2, 2);
  Eigen::Matrix4d n;
  n << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(n);
  const Eigen::Vector4d v = es.eigenvectors().col(3);
  const Eigen::Quaterniond q(v[0], v[1], v[2], v[3]);
  HornResult out;
  out.rotation = q.normalized().toRotationMatrix();
  const Eigen::MatrixXd ra = a * out.rotation.transpose();
  out.scale = (ra.array() * b.array()).sum() / a.squaredNorm();
  out.translation = md.transpose() - out.scale * out.rotation * ms.transpose();
  return out;
}

inline std::vector<std::uint8_t> all_visible(const TriangleMesh& m) {
  return std::vector<std::uint8_t>(m.vertices.rows(), 1);
}

// Random scene of n counter-clockwise (on screen) triangles with independent
// vertices, depths in [-0.8, 0.8].
inline TriangleMesh random_scene(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> xy(-0.9, 0.9), z(-0.8, 0.8), r(0.15, 0.7), ang(0, 6.283185307179586);
  TriangleMesh m;
  m.vertices.resize(3 * n, 3);
  m.faces.resize(n, 3);
  for (int f = 0; f < n; ++f) {
    const double cx = xy(rng), cy = xy(rng), a0 = ang(rng);
    for (int k = 0; k < 3; ++k) {
      const double a = a0 - k * 2.0943951023931953 + 0.3 * (ang(rng) / 6.283185307179586 - 0.5);
      const double rad = r(rng);
      m.vertices.row(3 * f + k) << cx + rad * std::cos(a), cy + rad * std::sin(a), z(rng);
    }
    m.faces.row(f) << 3 * f, 3 * f + 1, 3 * f + 2;
  }
  return m;
}

}  // namespace oracle

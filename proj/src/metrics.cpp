#include "dsr/metrics.h"

#include <Eigen/LU>
#include <Eigen/SVD>

namespace dsr {
namespace {

double mean_distance(const Vertices& a, const Vertices& b) {
  return (a - b).rowwise().norm().mean();
}

}  // namespace

Vertices Similarity::apply(const Vertices& points) const {
  Vertices out = (scale * (points * rotation.transpose())).eval();
  out.rowwise() += translation.transpose();
  return out;
}

Similarity procrustes(const Vertices& source, const Vertices& target) {
  DSR_CHECK_INPUT(source.rows() == target.rows() && source.rows() > 0,
                  "procrustes needs equal non-empty point sets, got {} and {}", source.rows(),
                  target.rows());
  const Eigen::RowVector3d mu_s = source.colwise().mean();
  const Eigen::RowVector3d mu_t = target.colwise().mean();
  const Vertices s = source.rowwise() - mu_s;
  const Vertices t = target.rowwise() - mu_t;
  const Eigen::Matrix3d cov = t.transpose() * s;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sign(1.0, 1.0, 1.0);
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) sign[2] = -1.0;
  Similarity out;
  out.rotation = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
  const double var = s.squaredNorm();
  out.scale = var > 0.0 ? svd.singularValues().dot(sign) / var : 1.0;
  out.translation = mu_t.transpose() - out.scale * out.rotation * mu_s.transpose();
  return out;
}

Metrics evaluate(const TriangleMesh& pred, const TriangleMesh& gt, const BodyTemplate& body) {
  DSR_CHECK_INPUT(pred.vertices.rows() == gt.vertices.rows() &&
                      pred.vertices.rows() == body.num_vertices(),
                  "topology mismatch: {} predicted vertices, {} ground-truth, {} in template",
                  pred.vertices.rows(), gt.vertices.rows(), body.num_vertices());
  const Vertices jp = regress_joints(pred, body);
  const Vertices jg = regress_joints(gt, body);
  const Eigen::RowVector3d rp = jp.row(0), rg = jg.row(0);
  Metrics m;
  m.mpjpe = 1000.0 * mean_distance(jp.rowwise() - rp, jg.rowwise() - rg);
  m.pve = 1000.0 * mean_distance(pred.vertices.rowwise() - rp, gt.vertices.rowwise() - rg);
  m.pa_mpjpe = 1000.0 * mean_distance(procrustes(jp, jg).apply(jp), jg);
  return m;
}

}  // namespace dsr

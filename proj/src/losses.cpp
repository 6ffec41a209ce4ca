#include "dsr/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsr/labels.h"

namespace dsr {

void LossWeights::validate() const {
  for (double w : {w_2d, w_3d, w_theta, w_mc, w_c}) {
    DSR_CHECK_INPUT(std::isfinite(w) && w >= 0.0, "loss weights must be finite and >= 0, got {}", w);
  }
}

ImageLoss soft_distm(const Image<double>& rendered, const DistanceField& dist) {
  DSR_CHECK_INPUT(rendered.channels == 1 && rendered.same_shape(dist.d.width, dist.d.height),
                  "soft_distm: rendering is {}x{}x{}, distance field {}x{}", rendered.width,
                  rendered.height, rendered.channels, dist.d.width, dist.d.height);
  ImageLoss out;
  out.grad = Image<double>(rendered.width, rendered.height);
  double mass = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    mass += rendered.data[i];
    weighted += rendered.data[i] * dist.d.data[i];
  }
  if (mass <= 1e-12) {
    out.skipped = true;
    return out;
  }
  const double denom = std::pow(mass, 1.5);
  out.value = weighted / denom;
  const double shift = 1.5 * weighted / (denom * mass);
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    out.grad.data[i] = dist.d.data[i] / denom - shift;
  }
  return out;
}

ImageLoss soft_iou_loss(const Image<double>& rendered, const BinaryMask& target) {
  DSR_CHECK_INPUT(rendered.channels == 1 && target.same_shape(rendered.width, rendered.height),
                  "soft_iou_loss: rendering is {}x{}x{}, target {}x{}", rendered.width,
                  rendered.height, rendered.channels, target.width, target.height);
  ImageLoss out;
  out.grad = Image<double>(rendered.width, rendered.height);
  double inter = 0.0, uni = 0.0;
  bool clamped = false;
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    double p = rendered.data[i];
    if (p < 0.0 || p > 1.0) {
      clamped = true;
      p = std::clamp(p, 0.0, 1.0);
    }
    const double g = target.data[i] ? 1.0 : 0.0;
    inter += p * g;
    uni += p + g - p * g;
  }
  if (clamped) log_warning("soft_iou_loss: rendered values outside [0, 1] were clamped");
  if (uni <= 0.0) {
    out.skipped = true;
    return out;
  }
  out.value = 1.0 - inter / uni;
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    const double p = rendered.data[i];
    if (p < 0.0 || p > 1.0) continue;
    const double g = target.data[i] ? 1.0 : 0.0;
    out.grad.data[i] = -(g * uni - inter * (1.0 - g)) / (uni * uni);
  }
  return out;
}

ImageLoss dsr_c_nll(const Image<double>& channels, const Image<std::uint8_t>& target,
                    const BinaryMask& silhouette, const NllOptions& options) {
  const int w = channels.width, h = channels.height, nc = channels.channels;
  DSR_CHECK_INPUT(target.same_shape(w, h) && silhouette.same_shape(w, h),
                  "dsr_c_nll: channels {}x{}, target {}x{}, silhouette {}x{}", w, h,
                  target.width, target.height, silhouette.width, silhouette.height);
  DSR_CHECK_INPUT(options.prob_floor > 0.0, "probability floor must be positive");
  ImageLoss out;
  out.grad = Image<double>(w, h, nc);
  std::vector<double> x(nc);
  std::size_t counted = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int t = target(r, c);
      if (!silhouette(r, c) || t == kIgnoreLabel) continue;
      DSR_CHECK_INPUT(t < nc, "target label {} at ({}, {}) exceeds {} channels", t, r, c, nc);
      double top = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < nc; ++k) {
        x[k] = std::log(std::max(channels(r, c, k), options.prob_floor));
        top = std::max(top, x[k]);
      }
      double z = 0.0;
      for (int k = 0; k < nc; ++k) z += std::exp(x[k] - top);
      const double lse = top + std::log(z);
      out.value += lse - x[t];
      for (int k = 0; k < nc; ++k) {
        const double p = channels(r, c, k);
        if (p <= options.prob_floor) continue;
        const double dx = std::exp(x[k] - lse) - (k == t ? 1.0 : 0.0);
        out.grad(r, c, k) = dx / p;
      }
      ++counted;
    }
  }
  if (counted == 0) {
    out.skipped = true;
    out.value = 0.0;
    return out;
  }
  if (!options.sum_reduction) {
    const double inv = 1.0 / static_cast<double>(counted);
    out.value *= inv;
    for (auto& g : out.grad.data) g *= inv;
  }
  return out;
}

namespace {

void check_finite(const auto& m, const char* term) {
  if (!m.allFinite()) throw NumericalError(fmt::format("non-finite input to the {} term", term));
}

}  // namespace

StandardLosses standard_losses(const Points2& joints_2d, const Vertices& joints_3d,
                               const BodyParams& params, const JointTargets& targets,
                               const LossWeights& weights, StandardLossGradient* grad) {
  weights.validate();
  const Eigen::Index nj = joints_3d.rows();
  DSR_CHECK_INPUT(nj > 0 && joints_2d.rows() == nj, "joint counts differ: {} 2D, {} 3D",
                  joints_2d.rows(), nj);
  StandardLosses out;
  if (grad) {
    grad->d_joints_2d = Points2::Zero(nj, 2);
    grad->d_joints_3d = Vertices::Zero(nj, 3);
    grad->d_theta = Eigen::VectorXd::Zero(params.theta.size());
    grad->d_beta = Eigen::VectorXd::Zero(params.beta.size());
  }

  if (targets.joints_2d) {
    const Points2& gt = *targets.joints_2d;
    DSR_CHECK_INPUT(gt.rows() == nj, "2D target has {} joints, expected {}", gt.rows(), nj);
    check_finite(joints_2d, "2D joint");
    check_finite(gt, "2D joint");
    Eigen::VectorXd conf = targets.confidence.size() ? targets.confidence
                                                     : Eigen::VectorXd::Ones(nj);
    DSR_CHECK_INPUT(conf.size() == nj, "confidence has {} entries, expected {}", conf.size(), nj);
    check_finite(conf, "2D joint");
    for (Eigen::Index j = 0; j < nj; ++j) {
      const Eigen::RowVector2d diff = joints_2d.row(j) - gt.row(j);
      out.l2d += conf[j] * diff.squaredNorm();
      if (grad) grad->d_joints_2d.row(j) = weights.w_2d * 2.0 * conf[j] * diff / double(nj);
    }
    out.l2d /= double(nj);
  }

  if (targets.joints_3d) {
    const Vertices& gt = *targets.joints_3d;
    DSR_CHECK_INPUT(gt.rows() == nj, "3D target has {} joints, expected {}", gt.rows(), nj);
    check_finite(joints_3d, "3D joint");
    check_finite(gt, "3D joint");
    const Eigen::VectorXd wj = targets.weights_3d.size() ? targets.weights_3d
                                                         : Eigen::VectorXd::Ones(nj);
    DSR_CHECK_INPUT(wj.size() == nj, "3D weights have {} entries, expected {}", wj.size(), nj);
    check_finite(wj, "3D joint");
    Vertices diff(nj, 3);
    for (Eigen::Index j = 0; j < nj; ++j) {
      diff.row(j) = (joints_3d.row(j) - joints_3d.row(0)) - (gt.row(j) - gt.row(0));
      out.l3d += wj[j] * diff.row(j).squaredNorm();
    }
    out.l3d /= double(nj);
    if (grad) {
      const double k = weights.w_3d * 2.0 / double(nj);
      for (Eigen::Index j = 0; j < nj; ++j) {
        grad->d_joints_3d.row(j) += k * wj[j] * diff.row(j);
        grad->d_joints_3d.row(0) -= k * wj[j] * diff.row(j);
      }
    }
  }

  if (targets.params) {
    const BodyParams& gt = *targets.params;
    DSR_CHECK_INPUT(gt.theta.size() == params.theta.size() && gt.beta.size() == params.beta.size(),
                  "parameter target has mismatched sizes");
    check_finite(params.theta, "pose/shape");
    check_finite(params.beta, "pose/shape");
    check_finite(gt.theta, "pose/shape");
    check_finite(gt.beta, "pose/shape");
    const Eigen::Index nr = params.theta.size() / 3;
    for (Eigen::Index j = 0; j < nr; ++j) {
      const Eigen::Vector3d aa = params.theta.segment<3>(3 * j);
      const Eigen::Matrix3d diff = rodrigues(aa) - rodrigues(gt.theta.segment<3>(3 * j));
      out.ltheta += diff.squaredNorm() / double(nr);
      if (grad) {
        const auto dR = rodrigues_jacobian(aa);
        for (int k = 0; k < 3; ++k) {
          grad->d_theta[3 * j + k] =
              weights.w_theta * 2.0 * (diff.array() * dR[k].array()).sum() / double(nr);
        }
      }
    }
    const Eigen::VectorXd db = params.beta - gt.beta;
    if (db.size() > 0) {
      out.ltheta += db.squaredNorm() / double(db.size());
      if (grad) grad->d_beta = weights.w_theta * 2.0 * db / double(db.size());
    }
  }

  out.total = weights.w_2d * out.l2d + weights.w_3d * out.l3d + weights.w_theta * out.ltheta;
  return out;
}

double dsr_gate(int iteration, int warmup) { return iteration < warmup ? 0.0 : 1.0; }

TotalLoss total_loss(const StandardLosses& standard, const DsrTerms& dsr,
                     const LossWeights& weights, int iteration, int warmup) {
  DSR_CHECK_INPUT(warmup >= 0, "warmup must be >= 0, got {}", warmup);
  TotalLoss out;
  out.standard = standard.total;
  out.total = standard.total;
  if (dsr_gate(iteration, warmup) == 0.0) return out;
  out.dsr_active = true;
  if (dsr.mc_valid && weights.w_mc > 0.0) out.mc = weights.w_mc * dsr.mc;
  if (dsr.c_valid && weights.w_c > 0.0) out.c = weights.w_c * dsr.c;
  out.total = standard.total + out.mc + out.c;
  return out;
}

}  // namespace dsr

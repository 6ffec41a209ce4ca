#pragma once

#include <cstdint>
#include <optional>

#include "dsr/body_model.h"
#include "dsr/distance_transform.h"

namespace dsr {

struct LossWeights {
  double w_2d = 1.0;
  double w_3d = 1.0;
  double w_theta = 1.0;
  double w_mc = 0.01;
  double w_c = 0.01;

  void validate() const;
};

// Scalar loss plus its gradient w.r.t. the image it was computed from.
struct ImageLoss {
  double value = 0.0;
  bool skipped = false;
  Image<double> grad;
};

// sum(R * d) / sum(R)^1.5 over a single-channel rendering.
ImageLoss soft_distm(const Image<double>& rendered, const DistanceField& dist);

// 1 - sum(P G) / sum(P + G - P G).
ImageLoss soft_iou_loss(const Image<double>& rendered, const BinaryMask& target);

struct NllOptions {
  bool sum_reduction = false;
  double prob_floor = 1e-8;
};

// Negative log-likelihood of the coarse target under log-softmax of the
// log-clamped rendered channels, over silhouette pixels with a valid target
// (kIgnoreLabel excluded). Mean over counted pixels unless sum_reduction.
ImageLoss dsr_c_nll(const Image<double>& channels, const Image<std::uint8_t>& target,
                    const BinaryMask& silhouette, const NllOptions& options = {});

struct JointTargets {
  std::optional<Points2> joints_2d;  // J x 2, pixels
  Eigen::VectorXd confidence;        // J; empty means all ones
  std::optional<Vertices> joints_3d; // J x 3
  Eigen::VectorXd weights_3d;        // J; empty means all ones
  std::optional<BodyParams> params;
};

struct StandardLosses {
  double l2d = 0.0;
  double l3d = 0.0;
  double ltheta = 0.0;
  double total = 0.0;
};

struct StandardLossGradient {
  Points2 d_joints_2d;
  Vertices d_joints_3d;
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_beta;
};

// l2d: sum_j c_j |x_j - x*_j|^2 / J, in pixels.
// l3d: sum_j w_j |e_j|^2 / J, e_j the error after centering both sets on
//      joint 0.
// ltheta: mean squared Frobenius distance of per-joint rotation matrices plus
//      mean squared shape difference.
// Gradients (when requested) are of the weighted total.
StandardLosses standard_losses(const Points2& joints_2d, const Vertices& joints_3d,
                               const BodyParams& params, const JointTargets& targets,
                               const LossWeights& weights, StandardLossGradient* grad = nullptr);

struct DsrTerms {
  double mc = 0.0;
  bool mc_valid = false;
  double c = 0.0;
  bool c_valid = false;
};

struct TotalLoss {
  double standard = 0.0;
  double mc = 0.0;  // weighted, after gating
  double c = 0.0;
  double total = 0.0;
  bool dsr_active = false;
};

// 0 before warmup, 1 from then on.
double dsr_gate(int iteration, int warmup);

TotalLoss total_loss(const StandardLosses& standard, const DsrTerms& dsr,
                     const LossWeights& weights, int iteration, int warmup);

}  // namespace dsr

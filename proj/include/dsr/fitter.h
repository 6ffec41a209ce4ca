#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsr/losses.h"
#include "dsr/metrics.h"
#include "dsr/semantic_prior.h"
#include "dsr/soft_raster.h"

namespace dsr {

enum class Optimizer { kGradientDescent, kAdam };
enum class McMetric { kSoftIou, kSoftDistm };

Optimizer optimizer_from_string(const std::string& name);
McMetric mc_metric_from_string(const std::string& name);

// Which parameter groups the optimizer may change.
struct ParamMask {
  bool theta = true;
  bool beta = true;
  bool camera = true;
};

struct FitSchedule {
  int iterations = 100;
  int warmup = 10;
  double step_size = 1e-2;
  double adam_eps = 1e-8;
  Optimizer optimizer = Optimizer::kAdam;
  LossWeights weights;
  ParamMask free;
  McMetric mc_metric = McMetric::kSoftIou;
  bool sum_reduction = false;
  // When false the semantic terms are never evaluated.
  bool enable_dsr = true;

  void validate() const;
};

// Warmup of one tenth of the iterations, rounded down.
int default_warmup(int iterations);

struct FitTargets {
  JointTargets joints;
  std::optional<BinaryMask> mc_mask;
  std::vector<int> valid_mc_labels;
  std::optional<Image<std::uint8_t>> c_mask;
};

struct FitProblem {
  const BodyTemplate* body = nullptr;
  const VertexLabelPrior* prior = nullptr;  // required for the semantic terms
  RasterConfig raster;
  FitTargets targets;

  void validate() const;
};

// Per-vertex attributes rendered for each semantic term.
RowMatrix mc_attributes(const VertexLabelPrior& prior, const std::vector<int>& valid_mc_labels);
RowMatrix c_attributes(const VertexLabelPrior& prior);

// Visibility and silhouette of the current mesh; held fixed when supplied.
struct FrozenVisibility {
  std::vector<std::uint8_t> visible;
  BinaryMask silhouette;
};

struct Objective {
  StandardLosses standard;
  double lmc = 0.0;  // unweighted
  double lc = 0.0;
  bool mc_evaluated = false;
  bool c_evaluated = false;
  TotalLoss total;
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_beta;
  Eigen::Vector3d d_camera = Eigen::Vector3d::Zero();
};

Objective evaluate_objective(const FitProblem& problem, const FitSchedule& schedule,
                             const BodyParams& params, int iteration, bool with_gradient,
                             const FrozenVisibility* frozen = nullptr);

struct TraceRecord {
  int iter = 0;
  double l2d = 0.0;
  double l3d = 0.0;
  double ltheta = 0.0;
  double lmc = 0.0;
  double lc = 0.0;
  double total = 0.0;

  nlohmann::json to_json() const;
  bool operator==(const TraceRecord&) const = default;
};

struct FitResult {
  BodyParams params;
  std::vector<TraceRecord> trace;
  std::optional<Metrics> metrics;
  bool diverged = false;
  std::string diagnostic;
};

using IterationCallback = std::function<void(int, const BodyParams&)>;

// Records the loss at the current parameters, then takes one step, for each
// iteration. On a non-finite loss or update the last finite parameters are
// returned with `diverged` set.
FitResult fit(const FitProblem& problem, const BodyParams& params0, const FitSchedule& schedule,
              const TriangleMesh* gt_mesh = nullptr, const IterationCallback& callback = {});

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace);

}  // namespace dsr

#include "dsr/fitter.h"

#include <cmath>

#include "dsr/distance_transform.h"

namespace dsr {

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "adam") return Optimizer::kAdam;
  if (name == "gd") return Optimizer::kGradientDescent;
  throw InputError(fmt::format("unknown optimizer '{}' (expected adam or gd)", name));
}

McMetric mc_metric_from_string(const std::string& name) {
  if (name == "siou") return McMetric::kSoftIou;
  if (name == "distm") return McMetric::kSoftDistm;
  throw InputError(fmt::format("unknown MC metric '{}' (expected siou or distm)", name));
}

void FitSchedule::validate() const {
  DSR_CHECK_INPUT(iterations >= 0, "iterations must be >= 0, got {}", iterations);
  DSR_CHECK_INPUT(warmup >= 0 && warmup <= iterations,
                  "warmup must be in [0, iterations], got {} of {}", warmup, iterations);
  DSR_CHECK_INPUT(std::isfinite(step_size) && step_size > 0.0, "step size must be > 0, got {}",
                  step_size);
  DSR_CHECK_INPUT(std::isfinite(adam_eps) && adam_eps > 0.0, "adam eps must be > 0, got {}",
                  adam_eps);
  weights.validate();
}

int default_warmup(int iterations) { return iterations / 10; }

void FitProblem::validate() const {
  DSR_CHECK_INPUT(body != nullptr, "fit problem has no body template");
  raster.validate();
  const bool any = targets.joints.joints_2d || targets.joints.joints_3d ||
                   targets.joints.params || targets.mc_mask || targets.c_mask;
  DSR_CHECK_INPUT(any, "fit problem has no active target");
  if (targets.mc_mask || targets.c_mask) {
    DSR_CHECK_INPUT(prior != nullptr, "semantic targets need a vertex label prior");
    DSR_CHECK_INPUT(prior->num_vertices() == body->num_vertices(),
                    "prior has {} vertices, template {}", prior->num_vertices(),
                    body->num_vertices());
  }
  if (targets.mc_mask) {
    DSR_CHECK_INPUT(targets.mc_mask->same_shape(raster.width, raster.height),
                    "MC mask is {}x{}, render size {}x{}", targets.mc_mask->width,
                    targets.mc_mask->height, raster.width, raster.height);
    DSR_CHECK_INPUT(!targets.valid_mc_labels.empty(), "MC mask without valid MC labels");
  }
  if (targets.c_mask) {
    DSR_CHECK_INPUT(targets.c_mask->same_shape(raster.width, raster.height),
                    "C mask is {}x{}, render size {}x{}", targets.c_mask->width,
                    targets.c_mask->height, raster.width, raster.height);
  }
}

RowMatrix mc_attributes(const VertexLabelPrior& prior, const std::vector<int>& valid_mc_labels) {
  RowMatrix out = RowMatrix::Zero(prior.probs.rows(), 1);
  for (int l : valid_mc_labels) out.col(0) += prior.probs.col(l);
  return out;
}

RowMatrix c_attributes(const VertexLabelPrior& prior) {
  return aggregate_labels(prior, clothing_scheme());
}

namespace {

FrozenVisibility visibility_of(const TriangleMesh& mesh, const Camera& camera,
                               const RasterConfig& cfg) {
  const HardRaster hard = rasterize_hard(mesh, camera, cfg);
  return {visible_vertices(hard, mesh), silhouette(hard)};
}

}  // namespace

Objective evaluate_objective(const FitProblem& problem, const FitSchedule& schedule,
                             const BodyParams& params, int iteration, bool with_gradient,
                             const FrozenVisibility* frozen) {
  const BodyTemplate& body = *problem.body;
  const BodyForwardState state = forward_with_state(body, params);
  const Viewport viewport = problem.raster.viewport();
  const Vertices joints = regress_joints(state.mesh, body);
  const Points2 joints_2d = project(joints, params.camera, viewport);

  Objective out;
  StandardLossGradient sg;
  out.standard = standard_losses(joints_2d, joints, params, problem.targets.joints,
                                 schedule.weights, with_gradient ? &sg : nullptr);

  Vertices d_vertices;
  if (with_gradient) {
    out.d_camera.setZero();
    Vertices d_joints = sg.d_joints_3d;
    if (problem.targets.joints.joints_2d) {
      const ProjectionGradient pg = project_vjp(joints, params.camera, viewport, sg.d_joints_2d);
      d_joints += pg.d_points;
      out.d_camera += pg.d_camera;
    }
    d_vertices = regress_joints_vjp(body, d_joints);
  }

  const bool gate = dsr_gate(iteration, schedule.warmup) > 0.0;
  const FitTargets& t = problem.targets;
  const bool want_mc = schedule.enable_dsr && gate && t.mc_mask && schedule.weights.w_mc > 0.0;
  const bool want_c = schedule.enable_dsr && gate && t.c_mask && schedule.weights.w_c > 0.0;
  DsrTerms dsr;
  if (want_mc || want_c) {
    FrozenVisibility computed;
    if (!frozen) computed = visibility_of(state.mesh, params.camera, problem.raster);
    const FrozenVisibility& vis = frozen ? *frozen : computed;
    auto add_render_grad = [&](const RowMatrix& attr, const Image<double>& cotangent, double w) {
      const RasterGradient rg = render_semantic_channels_vjp(
          state.mesh, attr, vis.visible, params.camera, problem.raster, cotangent);
      d_vertices += w * rg.d_vertices;
      out.d_camera += w * rg.d_camera;
    };
    if (want_mc) {
      const RowMatrix attr = mc_attributes(*problem.prior, t.valid_mc_labels);
      const ProbImage img =
          render_semantic_channels(state.mesh, attr, vis.visible, params.camera, problem.raster);
      const ImageLoss l = schedule.mc_metric == McMetric::kSoftIou
                              ? soft_iou_loss(img.image, *t.mc_mask)
                              : soft_distm(img.image, distance_transform(*t.mc_mask));
      out.mc_evaluated = !l.skipped;
      dsr.mc = l.value;
      dsr.mc_valid = !l.skipped;
      out.lmc = l.value;
      if (with_gradient && !l.skipped) add_render_grad(attr, l.grad, schedule.weights.w_mc);
    }
    if (want_c) {
      const RowMatrix attr = c_attributes(*problem.prior);
      const ProbImage img =
          render_semantic_channels(state.mesh, attr, vis.visible, params.camera, problem.raster);
      NllOptions nll;
      nll.sum_reduction = schedule.sum_reduction;
      const ImageLoss l = dsr_c_nll(img.image, *t.c_mask, vis.silhouette, nll);
      out.c_evaluated = !l.skipped;
      dsr.c = l.value;
      dsr.c_valid = !l.skipped;
      out.lc = l.value;
      if (with_gradient && !l.skipped) add_render_grad(attr, l.grad, schedule.weights.w_c);
    }
  }
  out.total = total_loss(out.standard, dsr, schedule.weights, iteration, schedule.warmup);

  if (with_gradient) {
    const BodyGradient bg = forward_vjp(body, params, state, d_vertices);
    out.d_theta = bg.theta + sg.d_theta;
    out.d_beta = bg.beta + sg.d_beta;
  }
  return out;
}

nlohmann::json TraceRecord::to_json() const {
  return {{"iter", iter}, {"l2d", l2d}, {"l3d", l3d}, {"ltheta", ltheta},
          {"lmc", lmc},   {"lc", lc},   {"total", total}};
}

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const auto& r : trace) out += r.to_json().dump() + "\n";
  return out;
}

namespace {

constexpr int kNumFlat = kNumPoseParams + kNumShapeParams + 3;

Eigen::VectorXd flatten(const BodyParams& p) {
  Eigen::VectorXd x(kNumFlat);
  x << p.theta, p.beta, p.camera.scale, p.camera.tx, p.camera.ty;
  return x;
}

BodyParams unflatten(const Eigen::VectorXd& x) {
  BodyParams p;
  p.theta = x.head(kNumPoseParams);
  p.beta = x.segment(kNumPoseParams, kNumShapeParams);
  p.camera = {x[kNumFlat - 3], x[kNumFlat - 2], x[kNumFlat - 1]};
  return p;
}

Eigen::VectorXd free_mask(const ParamMask& m) {
  Eigen::VectorXd mask(kNumFlat);
  mask << Eigen::VectorXd::Constant(kNumPoseParams, m.theta ? 1.0 : 0.0),
      Eigen::VectorXd::Constant(kNumShapeParams, m.beta ? 1.0 : 0.0),
      Eigen::VectorXd::Constant(3, m.camera ? 1.0 : 0.0);
  return mask;
}

}  // namespace

FitResult fit(const FitProblem& problem, const BodyParams& params0, const FitSchedule& schedule,
              const TriangleMesh* gt_mesh, const IterationCallback& callback) {
  problem.validate();
  schedule.validate();
  params0.validate();
  DSR_CHECK_INPUT(params0.theta.size() == kNumPoseParams && params0.beta.size() == kNumShapeParams,
                  "parameters must have {} pose and {} shape entries", kNumPoseParams,
                  kNumShapeParams);
  FitResult result;
  result.params = params0;
  Eigen::VectorXd x = flatten(params0);
  const Eigen::VectorXd mask = free_mask(schedule.free);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(kNumFlat), v = Eigen::VectorXd::Zero(kNumFlat);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999;

  for (int it = 0; it < schedule.iterations; ++it) {
    const BodyParams current = unflatten(x);
    if (callback) callback(it, current);
    const Objective obj = evaluate_objective(problem, schedule, current, it, true);
    TraceRecord rec{it, obj.standard.l2d, obj.standard.l3d, obj.standard.ltheta,
                    obj.lmc, obj.lc, obj.total.total};
    Eigen::VectorXd g(kNumFlat);
    g << obj.d_theta, obj.d_beta, obj.d_camera;
    if (!std::isfinite(rec.total) || !g.allFinite()) {
      result.diverged = true;
      result.diagnostic = fmt::format("non-finite loss or gradient at iteration {}", it);
      break;
    }
    result.trace.push_back(rec);
    g = g.cwiseProduct(mask);
    Eigen::VectorXd step;
    if (schedule.optimizer == Optimizer::kAdam) {
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(kBeta1, it + 1);
      const double c2 = 1.0 - std::pow(kBeta2, it + 1);
      step = schedule.step_size * (m / c1).cwiseQuotient(((v / c2).cwiseSqrt().array() + schedule.adam_eps).matrix());
    } else {
      step = schedule.step_size * g;
    }
    const Eigen::VectorXd next = x - step;
    if (!next.allFinite() || !(next[kNumFlat - 3] > 0.0)) {
      result.diverged = true;
      result.diagnostic = fmt::format("update left the valid parameter range at iteration {}", it);
      break;
    }
    x = next;
    result.params = unflatten(x);
  }
  if (result.diverged) log_warning(result.diagnostic);
  if (gt_mesh) result.metrics = evaluate(forward(*problem.body, result.params), *gt_mesh, *problem.body);
  return result;
}

}  // namespace dsr

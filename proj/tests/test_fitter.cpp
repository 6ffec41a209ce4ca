#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dsr/fitter.h"
#include "dsr/fixtures.h"
#include "dsr/gradcheck.h"
#include "dsr/metrics.h"
#include "oracles.h"

using namespace dsr;

namespace {

struct World {
  BodyTemplate body;
  HumanoidInfo info;
  VertexLabelPrior prior;
};

const World& world() {
  static const World w = [] {
    World out;
    out.body = make_humanoid({4, 2}, &out.info);
    ScanSetOptions so;
    so.num_subjects = 3;
    so.views_per_subject = 4;
    so.width = so.height = 64;
    const ScanSet scans = make_scan_set(out.body, out.info, so, 5);
    set_warnings_enabled(false);
    out.prior = clean_with_part_segmentation(
        normalize_counts(accumulate_all(scans.observations, out.body.num_vertices()), 0.05),
        out.body.part_labels, default_incompatibility());
    set_warnings_enabled(true);
    return out;
  }();
  return w;
}

FitProblem problem_for(const SyntheticInstance& inst, int size) {
  FitProblem p;
  p.body = &world().body;
  p.prior = &world().prior;
  p.raster.width = p.raster.height = size;
  p.targets.joints = inst.joints;
  p.targets.mc_mask = inst.targets.mc_mask;
  p.targets.valid_mc_labels = inst.targets.valid_mc_labels;
  p.targets.c_mask = inst.targets.c_mask;
  return p;
}

SyntheticInstance instance(std::uint64_t seed, int size = 64) {
  InstanceOptions io;
  io.width = io.height = size;
  return make_instance(world().body, world().info, io, seed);
}

Vertices random_points(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 0.3);
  Vertices v(n, 3);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = g(rng);
  return v;
}

}  // namespace

TEST(Metrics, IdenticalMeshesScoreZero) {
  const TriangleMesh m = forward(world().body, instance(1).gt);
  const Metrics r = evaluate(m, m, world().body);
  EXPECT_EQ(r.mpjpe, 0.0);
  EXPECT_EQ(r.pve, 0.0);
  EXPECT_NEAR(r.pa_mpjpe, 0.0, 1e-9);
}

TEST(Metrics, SimilarityIsRemovedOnlyByAlignment) {
  const TriangleMesh gt = forward(world().body, instance(2).gt);
  Similarity s;
  s.scale = 1.3;
  s.rotation = oracle::rodrigues_quat(Eigen::Vector3d(0.2, -0.5, 0.3));
  s.translation = Eigen::Vector3d(0.1, 0.4, -0.2);
  TriangleMesh pred = gt;
  pred.vertices = s.apply(gt.vertices);
  const Metrics r = evaluate(pred, gt, world().body);
  EXPECT_NEAR(r.pa_mpjpe, 0.0, 1e-8);
  EXPECT_GT(r.mpjpe, 1.0);
  EXPECT_GT(r.pve, 1.0);
  TriangleMesh bad = gt;
  bad.vertices.conservativeResize(10, 3);
  EXPECT_THROW(evaluate(bad, gt, world().body), InputError);
}

TEST(Metrics, ProcrustesMatchesHorn) {
  std::mt19937_64 rng(80);
  std::normal_distribution<double> g(0.0, 0.01);
  for (int t = 0; t < 10; ++t) {
    const Vertices a = random_points(rng, 24);
    Vertices b = random_points(rng, 24);
    b = 0.5 * a + 0.5 * b;
    const Similarity s = procrustes(a, b);
    const oracle::HornResult h = oracle::horn(a, b);
    EXPECT_NEAR(s.scale, h.scale, 1e-8);
    EXPECT_LT((s.rotation - h.rotation).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((s.translation - h.translation).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(s.rotation.determinant(), 1.0, 1e-12);
  }
}

TEST(Metrics, AlignedErrorNeverExceedsRootAligned) {
  std::mt19937_64 rng(81);
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const SyntheticInstance inst = instance(seed);
    const Metrics r = evaluate(forward(world().body, inst.init), inst.gt_mesh, world().body);
    EXPECT_LE(r.pa_mpjpe, r.mpjpe + 1e-9);
    EXPECT_GT(r.pve, 0.0);
  }
}

TEST(Fitter, ScheduleValidation) {
  FitSchedule s;
  EXPECT_NO_THROW(s.validate());
  s.warmup = 101;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.step_size = 0;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.adam_eps = -1;
  EXPECT_THROW(s.validate(), InputError);
  EXPECT_EQ(default_warmup(100), 10);
  EXPECT_EQ(default_warmup(9), 0);
  EXPECT_THROW(optimizer_from_string("lbfgs"), InputError);
  EXPECT_EQ(mc_metric_from_string("distm"), McMetric::kSoftDistm);
}

TEST(Fitter, ProblemWithoutTargetsIsRejected) {
  FitProblem p;
  p.body = &world().body;
  EXPECT_THROW(fit(p, BodyParams{}, FitSchedule{}), InputError);
}

TEST(Fitter, ExactJointTargetsAreAFixedPoint) {
  const SyntheticInstance inst = instance(3);
  FitProblem p = problem_for(inst, 64);
  p.targets.mc_mask.reset();
  p.targets.c_mask.reset();
  FitSchedule s;
  s.iterations = 5;
  s.warmup = 0;
  const FitResult r = fit(p, inst.gt, s);
  EXPECT_FALSE(r.diverged);
  EXPECT_EQ(r.params.theta, inst.gt.theta);
  EXPECT_EQ(r.params.beta, inst.gt.beta);
  EXPECT_EQ(r.params.camera.scale, inst.gt.camera.scale);
  for (const auto& t : r.trace) EXPECT_EQ(t.total, 0.0);
}

TEST(Fitter, ZeroIterationsReturnInit) {
  const SyntheticInstance inst = instance(4);
  FitSchedule s;
  s.iterations = 0;
  s.warmup = 0;
  const FitResult r = fit(problem_for(inst, 64), inst.init, s, &inst.gt_mesh);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.params.theta, inst.init.theta);
  ASSERT_TRUE(r.metrics);
}

TEST(Fitter, ZeroDsrWeightsMatchDisabledBuild) {
  const SyntheticInstance inst = instance(5);
  const FitProblem p = problem_for(inst, 64);
  FitSchedule a;
  a.iterations = 20;
  a.warmup = 2;
  a.weights.w_mc = 0.0;
  a.weights.w_c = 0.0;
  FitSchedule b = a;
  b.enable_dsr = false;
  b.weights = {};
  b.weights.w_mc = 0.01;  // ignored when disabled
  const FitResult ra = fit(p, inst.init, a);
  const FitResult rb = fit(p, inst.init, b);
  ASSERT_EQ(ra.trace.size(), 20u);
  EXPECT_EQ(ra.trace, rb.trace);
  EXPECT_EQ(ra.params.theta, rb.params.theta);
  EXPECT_EQ(ra.params.beta, rb.params.beta);
}

TEST(Fitter, DsrContributesNothingBeforeWarmup) {
  const SyntheticInstance inst = instance(6);
  const FitProblem p = problem_for(inst, 64);
  ASSERT_TRUE(p.targets.c_mask);
  FitSchedule on;
  on.iterations = 12;
  on.warmup = 6;
  on.weights.w_mc = on.weights.w_c = 0.5;
  FitSchedule off = on;
  off.enable_dsr = false;
  const FitResult ra = fit(p, inst.init, on);
  const FitResult rb = fit(p, inst.init, off);
  for (int it = 0; it < 6; ++it) {
    EXPECT_EQ(ra.trace[it], rb.trace[it]) << it;
    EXPECT_EQ(ra.trace[it].lmc, 0.0);
    EXPECT_EQ(ra.trace[it].lc, 0.0);
  }
  EXPECT_GT(ra.trace[6].lc, 0.0);
  EXPECT_NE(ra.trace[6].total, rb.trace[6].total);
  for (int it = 0; it < 6; ++it) {
    const Objective o = evaluate_objective(p, on, inst.init, it, false);
    EXPECT_EQ(o.total.mc, 0.0);
    EXPECT_EQ(o.total.c, 0.0);
    EXPECT_FALSE(o.total.dsr_active);
  }
}

TEST(Fitter, ObjectiveGradientMatchesFiniteDifferences) {
  const SyntheticInstance inst = instance(7, 32);
  FitProblem p = problem_for(inst, 32);
  p.raster.sigma = 1e-4;
  FitSchedule s;
  s.warmup = 0;
  s.weights.w_mc = s.weights.w_c = 0.3;
  const BodyParams x = inst.init;
  const Objective o = evaluate_objective(p, s, x, 0, true);
  ASSERT_TRUE(o.c_evaluated);
  const HardRaster hr = rasterize_hard(forward(world().body, x), x.camera, p.raster);
  const FrozenVisibility frozen{visible_vertices(hr, forward(world().body, x)), silhouette(hr)};
  const double h = 1e-6;
  auto f = [&](const BodyParams& q) { return evaluate_objective(p, s, q, 0, false, &frozen).total.total; };
  for (int i : {0, 5, 27, 50, 61}) {
    BodyParams a = x, b = x;
    a.theta[i] += h;
    b.theta[i] -= h;
    const double fd = (f(a) - f(b)) / (2 * h);
    EXPECT_NEAR(o.d_theta[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << i;
  }
  for (int i : {0, 3}) {
    BodyParams a = x, b = x;
    a.beta[i] += h;
    b.beta[i] -= h;
    const double fd = (f(a) - f(b)) / (2 * h);
    EXPECT_NEAR(o.d_beta[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << i;
  }
  BodyParams a = x, b = x;
  a.camera.tx += h;
  b.camera.tx -= h;
  const double fd = (f(a) - f(b)) / (2 * h);
  EXPECT_NEAR(o.d_camera[1], fd, 1e-4 * std::max(1.0, std::abs(fd)));
}

TEST(Fitter, CameraOnlyGradientDescent) {
  const SyntheticInstance inst = instance(8);
  FitProblem p = problem_for(inst, 64);
  p.targets.mc_mask.reset();
  p.targets.c_mask.reset();
  p.targets.joints.joints_3d.reset();
  p.targets.joints.params.reset();
  BodyParams start = inst.gt;
  start.camera.tx += 0.08;
  start.camera.ty -= 0.05;
  start.camera.scale *= 1.1;
  FitSchedule s;
  s.optimizer = Optimizer::kGradientDescent;
  s.step_size = 3e-4;
  s.iterations = 300;
  s.free = {false, false, true};
  const FitResult r = fit(p, start, s);
  ASSERT_FALSE(r.diverged);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i].total, r.trace[i - 1].total + 1e-20) << i;
  EXPECT_EQ(r.params.theta, start.theta);

  // grid search over the two translations at the fitted scale
  auto loss = [&](double tx, double ty) {
    BodyParams q = r.params;
    q.camera.tx = tx;
    q.camera.ty = ty;
    return evaluate_objective(p, s, q, 0, false).total.total;
  };
  double best = std::numeric_limits<double>::infinity(), bx = 0, by = 0;
  for (int i = -40; i <= 40; ++i)
    for (int j = -40; j <= 40; ++j) {
      const double tx = inst.gt.camera.tx + 0.0025 * i, ty = inst.gt.camera.ty + 0.0025 * j;
      const double v = loss(tx, ty);
      if (v < best) best = v, bx = tx, by = ty;
    }
  EXPECT_NEAR(r.params.camera.tx, bx, 0.0025);
  EXPECT_NEAR(r.params.camera.ty, by, 0.0025);
  EXPECT_LE(r.trace.back().total, 1.05 * best + 1e-9);
  EXPECT_NEAR(r.params.camera.scale, inst.gt.camera.scale, 0.05 * inst.gt.camera.scale);
}

TEST(Fitter, Deterministic) {
  const SyntheticInstance inst = instance(9);
  const FitProblem p = problem_for(inst, 64);
  FitSchedule s;
  s.iterations = 15;
  s.warmup = 3;
  const FitResult a = fit(p, inst.init, s, &inst.gt_mesh);
  const FitResult b = fit(p, inst.init, s, &inst.gt_mesh);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.params.theta, b.params.theta);
  EXPECT_EQ(a.metrics->pve, b.metrics->pve);
  EXPECT_EQ(trace_to_jsonl(a.trace), trace_to_jsonl(b.trace));
}

TEST(Fitter, DivergenceKeepsLastFiniteParameters) {
  const SyntheticInstance inst = instance(10);
  FitProblem p = problem_for(inst, 64);
  FitSchedule s;
  s.optimizer = Optimizer::kGradientDescent;
  s.step_size = 1e6;
  s.iterations = 50;
  set_warnings_enabled(false);
  const FitResult r = fit(p, inst.init, s);
  set_warnings_enabled(true);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.diagnostic.empty());
  EXPECT_TRUE(r.params.theta.allFinite());
  EXPECT_GT(r.params.camera.scale, 0.0);
  EXPECT_LT(r.trace.size(), 50u);
}

TEST(Fitter, IterationCallbackSeesEveryStep) {
  const SyntheticInstance inst = instance(11);
  FitSchedule s;
  s.iterations = 4;
  s.warmup = 0;
  std::vector<int> seen;
  fit(problem_for(inst, 32 * 2), inst.init, s, nullptr, [&](int it, const BodyParams&) { seen.push_back(it); });
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Gradcheck, DefaultSuitePasses) {
  GradcheckOptions o;
  o.size = 8;
  const GradcheckReport r = run_gradcheck(o);
  EXPECT_TRUE(r.passed()) << r.to_text();
  EXPECT_GE(r.groups.size(), 5u);
  for (const auto& g : r.groups) {
    EXPECT_GT(g.checked, 0) << g.name;
    EXPECT_EQ(g.tolerance, 1e-4);
  }
}

TEST(Gradcheck, SinglePrecisionUsesLooserTolerance) {
  GradcheckOptions o;
  o.size = 8;
  o.single_precision = true;
  const GradcheckReport r = run_gradcheck(o);
  EXPECT_TRUE(r.single_precision);
  int loose = 0;
  for (const auto& g : r.groups) {
    EXPECT_TRUE(g.tolerance == 1e-2 || g.tolerance == 1e-4) << g.name;
    loose += g.tolerance == 1e-2;
  }
  EXPECT_GE(loose, 2);
  EXPECT_TRUE(r.passed()) << r.to_text();
}

TEST(Gradcheck, RejectsBadOptions) {
  GradcheckOptions o;
  o.sigma = 0;
  EXPECT_THROW(run_gradcheck(o), InputError);
  o = {};
  o.size = 1;
  EXPECT_THROW(run_gradcheck(o), InputError);
}

#include "dsr/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "dsr/fitter.h"
#include "dsr/template_gen.h"

namespace dsr {
namespace {

struct Comparison {
  std::vector<double> analytic;
  std::vector<double> numeric;
};

GradcheckGroup summarize(const std::string& name, const Comparison& c, double tolerance) {
  GradcheckGroup g;
  g.name = name;
  g.tolerance = tolerance;
  g.checked = static_cast<int>(c.analytic.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < c.analytic.size(); ++i) {
    scale = std::max({scale, std::abs(c.analytic[i]), std::abs(c.numeric[i])});
  }
  const double floor = std::max(1e-6 * scale, 1e-300);
  for (std::size_t i = 0; i < c.analytic.size(); ++i) {
    const double a = c.analytic[i], n = c.numeric[i];
    const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
    g.max_rel_error = std::max(g.max_rel_error, rel);
  }
  return g;
}

// Perturbs `x` in place and restores it.
double central_difference(double& x, double h, const std::function<double()>& f) {
  const double saved = x;
  x = saved + h;
  const double fp = f();
  x = saved - h;
  const double fm = f();
  x = saved;
  return (fp - fm) / (2.0 * h);
}

double contract(const Image<double>& a, const Image<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

TriangleMesh random_scene(std::mt19937_64& rng, int faces) {
  std::uniform_real_distribution<double> pos(-0.8, 0.8), depth(-0.5, 0.5);
  TriangleMesh mesh;
  mesh.vertices.resize(3 * faces, 3);
  mesh.faces.resize(faces, 3);
  for (int f = 0; f < faces; ++f) {
    for (int k = 0; k < 3; ++k) {
      mesh.vertices.row(3 * f + k) << pos(rng), pos(rng), depth(rng);
    }
    const Eigen::RowVector3d e1 = mesh.vertices.row(3 * f + 1) - mesh.vertices.row(3 * f);
    const Eigen::RowVector3d e2 = mesh.vertices.row(3 * f + 2) - mesh.vertices.row(3 * f);
    const bool front = e1.x() * e2.y() - e1.y() * e2.x() < 0.0;
    mesh.faces.row(f) << 3 * f, front ? 3 * f + 1 : 3 * f + 2, front ? 3 * f + 2 : 3 * f + 1;
  }
  return mesh;
}

Image<double> random_image(std::mt19937_64& rng, int w, int h, int c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image<double> img(w, h, c);
  for (auto& v : img.data) v = u(rng);
  return img;
}

void raster_groups(const GradcheckOptions& opt, double h, double tol, std::mt19937_64& rng,
                   GradcheckReport& report) {
  RasterConfig cfg;
  cfg.width = cfg.height = opt.size;
  cfg.sigma = opt.sigma;
  cfg.gamma = opt.gamma;
  cfg.cutoff = false;
  cfg.single_precision = opt.single_precision;
  cfg.tile_size = 8;
  TriangleMesh mesh = random_scene(rng, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RowMatrix attr(mesh.vertices.rows(), 2);
  for (Eigen::Index i = 0; i < attr.size(); ++i) attr.data()[i] = u(rng);
  Camera cam{0.9, 0.05, -0.03};
  const Image<double> cot = random_image(rng, cfg.width, cfg.height, 2, -1.0, 1.0);
  const RasterGradient g = rasterize_soft_vjp(mesh, attr, cam, cfg, cot);
  RasterConfig reference = cfg;
  reference.single_precision = false;
  auto f = [&] { return contract(rasterize_soft(mesh, attr, cam, reference).image, cot); };

  Comparison cv, ca, cc;
  for (Eigen::Index i = 0; i < mesh.vertices.size(); ++i) {
    cv.analytic.push_back(g.d_vertices.data()[i]);
    cv.numeric.push_back(central_difference(mesh.vertices.data()[i], h, f));
  }
  for (Eigen::Index i = 0; i < attr.size(); ++i) {
    ca.analytic.push_back(g.d_attributes.data()[i]);
    ca.numeric.push_back(central_difference(attr.data()[i], h, f));
  }
  double* cam_fields[3] = {&cam.scale, &cam.tx, &cam.ty};
  for (int k = 0; k < 3; ++k) {
    cc.analytic.push_back(g.d_camera[k]);
    cc.numeric.push_back(central_difference(*cam_fields[k], h, f));
  }
  report.groups.push_back(summarize("raster.vertices", cv, tol));
  report.groups.push_back(summarize("raster.attributes", ca, tol));
  report.groups.push_back(summarize("raster.camera", cc, tol));
}

void image_loss_group(const std::string& name, Image<double> input,
                      const std::function<ImageLoss(const Image<double>&)>& loss, double h,
                      double tol, GradcheckReport& report) {
  const ImageLoss base = loss(input);
  Comparison c;
  for (std::size_t i = 0; i < input.data.size(); ++i) {
    c.analytic.push_back(base.grad.data[i]);
    c.numeric.push_back(central_difference(input.data[i], h, [&] { return loss(input).value; }));
  }
  report.groups.push_back(summarize(name, c, tol));
}

void loss_groups(double tol, std::mt19937_64& rng, GradcheckReport& report) {
  constexpr int kSide = 8;
  constexpr double kStep = 1e-6;
  std::bernoulli_distribution coin(0.4);
  BinaryMask g(kSide, kSide);
  for (auto& v : g.data) v = coin(rng);
  g(3, 3) = 1;
  const DistanceField dist = distance_transform(g);
  image_loss_group("loss.soft_distm", random_image(rng, kSide, kSide, 1, 0.05, 0.95),
                   [&](const Image<double>& r) { return soft_distm(r, dist); }, kStep, tol, report);
  image_loss_group("loss.soft_iou", random_image(rng, kSide, kSide, 1, 0.05, 0.95),
                   [&](const Image<double>& p) { return soft_iou_loss(p, g); }, kStep, tol, report);
  Image<std::uint8_t> target(kSide, kSide);
  std::uniform_int_distribution<int> cls(0, 3);
  for (auto& v : target.data) v = static_cast<std::uint8_t>(cls(rng));
  BinaryMask sil(kSide, kSide);
  for (auto& v : sil.data) v = coin(rng) ? 0 : 1;
  image_loss_group("loss.dsr_c_nll", random_image(rng, kSide, kSide, 4, 0.05, 0.95),
                   [&](const Image<double>& ch) { return dsr_c_nll(ch, target, sil); }, kStep,
                   tol, report);
}

void chain_groups(const GradcheckOptions& opt, double h, double tol, std::mt19937_64& rng,
                  GradcheckReport& report) {
  HumanoidOptions ho;
  ho.sides = 4;
  ho.rings = 2;
  const BodyTemplate body = make_humanoid(ho);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  VertexLabelPrior prior;
  prior.probs.resize(body.num_vertices(), kNumLabels);
  for (Eigen::Index v = 0; v < prior.probs.rows(); ++v) {
    for (int l = 0; l < kNumLabels; ++l) prior.probs(v, l) = u(rng) + 0.05;
    prior.probs.row(v) /= prior.probs.row(v).sum();
  }

  std::normal_distribution<double> n(0.0, 0.2);
  BodyParams truth;
  truth.camera = {0.95, 0.0, -0.06};
  for (int i = 0; i < kNumPoseParams; ++i) truth.theta[i] = n(rng);
  truth.theta.head<3>().setZero();
  BodyParams params = truth;
  for (int i = 0; i < kNumPoseParams; ++i) params.theta[i] += 0.5 * n(rng);
  for (int i = 0; i < kNumShapeParams; ++i) params.beta[i] = n(rng);
  params.camera.tx += 0.03;

  FitProblem problem;
  problem.body = &body;
  problem.prior = &prior;
  problem.raster.width = problem.raster.height = opt.size;
  problem.raster.sigma = opt.sigma;
  problem.raster.gamma = opt.gamma;
  problem.raster.cutoff = false;
  problem.raster.single_precision = opt.single_precision;
  problem.raster.tile_size = 8;

  const TriangleMesh gt_mesh = forward(body, truth);
  const Vertices j3d = regress_joints(gt_mesh, body);
  problem.targets.joints.joints_3d = j3d;
  problem.targets.joints.joints_2d = project(j3d, truth.camera, problem.raster.viewport());
  problem.targets.joints.params = truth;
  const HardRaster hard = rasterize_hard(gt_mesh, truth.camera, problem.raster);
  BinaryMask mc(opt.size, opt.size);
  Image<std::uint8_t> c(opt.size, opt.size);
  std::uniform_int_distribution<int> cls(1, 3);
  for (std::size_t i = 0; i < mc.data.size(); ++i) {
    if (hard.face_index.data[i] == kNoFace) continue;
    mc.data[i] = u(rng) < 0.5;
    c.data[i] = static_cast<std::uint8_t>(cls(rng));
  }
  problem.targets.mc_mask = mc;
  problem.targets.valid_mc_labels = {kLeftArm, kRightArm, kFace};
  problem.targets.c_mask = c;

  FitSchedule schedule;
  schedule.warmup = 0;
  schedule.weights.w_mc = 0.5;
  schedule.weights.w_c = 0.5;
  schedule.weights.w_2d = 1e-2;

  const HardRaster cur = rasterize_hard(forward(body, params), params.camera, problem.raster);
  const FrozenVisibility frozen{visible_vertices(cur, forward(body, params)), silhouette(cur)};
  const Objective base = evaluate_objective(problem, schedule, params, 0, true, &frozen);
  FitProblem reference = problem;
  reference.raster.single_precision = false;
  auto f = [&] {
    return evaluate_objective(reference, schedule, params, 0, false, &frozen).total.total;
  };

  Comparison ct, cb, cc;
  for (int i = 0; i < kNumPoseParams; ++i) {
    ct.analytic.push_back(base.d_theta[i]);
    ct.numeric.push_back(central_difference(params.theta[i], h, f));
  }
  for (int i = 0; i < kNumShapeParams; ++i) {
    cb.analytic.push_back(base.d_beta[i]);
    cb.numeric.push_back(central_difference(params.beta[i], h, f));
  }
  double* cam_fields[3] = {&params.camera.scale, &params.camera.tx, &params.camera.ty};
  for (int k = 0; k < 3; ++k) {
    cc.analytic.push_back(base.d_camera[k]);
    cc.numeric.push_back(central_difference(*cam_fields[k], h, f));
  }
  report.groups.push_back(summarize("chain.theta", ct, tol));
  report.groups.push_back(summarize("chain.beta", cb, tol));
  report.groups.push_back(summarize("chain.camera", cc, tol));
}

}  // namespace

bool GradcheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.passed(); });
}

nlohmann::json GradcheckReport::to_json() const {
  nlohmann::json gs = nlohmann::json::array();
  for (const auto& g : groups) {
    gs.push_back({{"name", g.name},
                  {"checked", g.checked},
                  {"max_rel_error", g.max_rel_error},
                  {"tolerance", g.tolerance},
                  {"passed", g.passed()}});
  }
  return {{"step", step}, {"single_precision", single_precision}, {"passed", passed()},
          {"groups", gs}};
}

std::string GradcheckReport::to_text() const {
  std::string out = fmt::format("{:<20} {:>8} {:>14} {:>10}  status\n", "group", "checked",
                                "max_rel_err", "tolerance");
  for (const auto& g : groups) {
    out += fmt::format("{:<20} {:>8} {:>14.3e} {:>10.0e}  {}\n", g.name, g.checked,
                       g.max_rel_error, g.tolerance, g.passed() ? "ok" : "FAIL");
  }
  if (single_precision) out += "single precision: tolerance loosened to 1e-2\n";
  return out;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  DSR_CHECK_INPUT(options.size >= 4 && options.size <= 64, "gradcheck size must be in [4, 64], got {}",
                  options.size);
  RasterConfig probe;
  probe.sigma = options.sigma;
  probe.gamma = options.gamma;
  probe.validate();
  GradcheckReport report;
  report.single_precision = options.single_precision;
  report.step = 1e-5;
  const double tol = options.single_precision ? 1e-2 : 1e-4;
  std::mt19937_64 rng(options.seed);
  raster_groups(options, report.step, tol, rng, report);
  loss_groups(1e-4, rng, report);
  chain_groups(options, report.step, tol, rng, report);
  return report;
}

}  // namespace dsr

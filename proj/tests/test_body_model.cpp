#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "dsr/body_model.h"
#include "dsr/mesh_io.h"
#include "dsr/template_gen.h"
#include "oracles.h"

using namespace dsr;

namespace {

BodyParams random_params(std::mt19937_64& rng, double pose = 0.4, double shape = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  BodyParams p;
  for (int i = 0; i < kNumPoseParams; ++i) p.theta[i] = pose * n(rng);
  for (int i = 0; i < kNumShapeParams; ++i) p.beta[i] = shape * n(rng);
  p.camera = {0.9 + 0.1 * n(rng), 0.05 * n(rng), 0.05 * n(rng)};
  return p;
}

const BodyTemplate& humanoid() {
  static const BodyTemplate body = make_humanoid();
  return body;
}

}  // namespace

TEST(Rodrigues, ZeroIsIdentity) {
  EXPECT_EQ(rodrigues(Eigen::Vector3d::Zero()), Eigen::Matrix3d::Identity());
}

TEST(Rodrigues, QuarterTurnAboutZ) {
  const Eigen::Matrix3d r = rodrigues({0, 0, M_PI / 2});
  EXPECT_LT((r * Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitY()).norm(), 1e-15);
}

TEST(Rodrigues, MatchesQuaternion) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.5);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d w(n(rng), n(rng), n(rng));
    EXPECT_LT((rodrigues(w) - oracle::rodrigues_quat(w)).cwiseAbs().maxCoeff(), 1e-10);
  }
  const Eigen::Vector3d tiny(1e-9, -2e-9, 5e-10);
  EXPECT_LT((rodrigues(tiny) - oracle::rodrigues_quat(tiny)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RodriguesJacobian, FiniteDifferences) {
  const Eigen::Vector3d w(0.3, -0.7, 0.2);
  const auto jac = rodrigues_jacobian(w);
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d a = w, b = w;
    a[k] += 1e-6;
    b[k] -= 1e-6;
    const Eigen::Matrix3d fd = (rodrigues(a) - rodrigues(b)) / 2e-6;
    EXPECT_LT((fd - jac[k]).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Template, HumanoidIsValid) {
  const BodyTemplate& b = humanoid();
  EXPECT_NO_THROW(b.validate());
  EXPECT_EQ(b.num_joints(), kNumJoints);
  EXPECT_GE(b.num_vertices(), 600);
  EXPECT_LE(b.num_vertices(), 1000);
  EXPECT_EQ(b.num_shape(), kNumShapeParams);
  for (int v = 0; v < b.num_vertices(); ++v) EXPECT_NEAR(b.skin_weights.row(v).sum(), 1.0, 1e-12);
}

TEST(Template, ValidateRejectsBrokenInvariants) {
  BodyTemplate b = humanoid();
  b.faces(0, 1) = b.faces(0, 0);
  EXPECT_THROW(b.validate(), InputError);
  b = humanoid();
  b.faces(3, 2) = b.num_vertices();
  EXPECT_THROW(b.validate(), InputError);
  b = humanoid();
  b.skin_weights(5, 0) += 0.1;
  EXPECT_THROW(b.validate(), InputError);
  b = humanoid();
  b.skin_weights(5, 0) = -b.skin_weights(5, 0) - 1e-3;
  EXPECT_THROW(b.validate(), InputError);
}

TEST(Params, ValidateSizesAndScale) {
  BodyParams p;
  EXPECT_NO_THROW(p.validate());
  p.theta = Eigen::VectorXd::Zero(71);
  EXPECT_THROW(p.validate(), InputError);
  p = BodyParams{};
  p.beta = Eigen::VectorXd::Zero(11);
  EXPECT_THROW(p.validate(), InputError);
  p = BodyParams{};
  p.camera.scale = 0.0;
  EXPECT_THROW(p.validate(), InputError);
}

TEST(Forward, RestPoseIsExact) {
  const BodyTemplate& b = humanoid();
  EXPECT_EQ(forward(b, BodyParams{}).vertices, b.template_vertices);
}

TEST(Forward, SingleBlendshape) {
  const BodyTemplate& b = humanoid();
  BodyParams p;
  p.beta[0] = 1.0;
  const Vertices expected = b.template_vertices + b.shape_dirs.leftCols(3);
  EXPECT_EQ(forward(b, p).vertices, expected);
}

TEST(Forward, MatchesHomogeneousLoop) {
  const BodyTemplate& b = humanoid();
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5; ++i) {
    const BodyParams p = random_params(rng);
    const Vertices got = forward(b, p).vertices;
    const Vertices want = oracle::lbs_loop(b, p);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Forward, GlobalRotationRotatesAboutRoot) {
  const BodyTemplate& b = humanoid();
  std::mt19937_64 rng(8);
  BodyParams p = random_params(rng);
  p.theta.head<3>().setZero();
  const Vertices a = forward(b, p).vertices;
  BodyParams shaped;
  shaped.beta = p.beta;
  const Eigen::RowVector3d root = regress_joints(forward(b, shaped), b).row(0);
  const Eigen::Vector3d w(0.4, -1.1, 0.6);
  p.theta.head<3>() = w;
  const Vertices rotated = forward(b, p).vertices;
  const Eigen::Matrix3d r = rodrigues(w);
  const Vertices want = ((a.rowwise() - root) * r.transpose()).rowwise() + root;
  EXPECT_LT((rotated - want).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Forward, RejectsMismatchedShapeCount) {
  BodyTemplate b = humanoid();
  b.shape_dirs = b.shape_dirs.leftCols(27).eval();
  EXPECT_THROW(forward(b, BodyParams{}), InputError);
}

TEST(ForwardVjp, FiniteDifferences) {
  const BodyTemplate& b = humanoid();
  std::mt19937_64 rng(9);
  const BodyParams p = random_params(rng, 0.3, 0.5);
  std::normal_distribution<double> n(0.0, 1.0);
  Vertices cot(b.num_vertices(), 3);
  for (Eigen::Index i = 0; i < cot.size(); ++i) cot.data()[i] = n(rng);
  const auto st = forward_with_state(b, p);
  const BodyGradient g = forward_vjp(b, p, st, cot);
  auto value = [&](const BodyParams& q) { return (forward(b, q).vertices.array() * cot.array()).sum(); };
  const double h = 1e-5;
  for (int i = 0; i < kNumPoseParams; i += 5) {
    BodyParams a = p, c = p;
    a.theta[i] += h;
    c.theta[i] -= h;
    const double fd = (value(a) - value(c)) / (2 * h);
    EXPECT_NEAR(g.theta[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "theta " << i;
  }
  for (int i = 0; i < kNumShapeParams; ++i) {
    BodyParams a = p, c = p;
    a.beta[i] += h;
    c.beta[i] -= h;
    const double fd = (value(a) - value(c)) / (2 * h);
    EXPECT_NEAR(g.beta[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "beta " << i;
  }
}

TEST(Project, IdentityCameraHitsCentre) {
  Vertices pts(1, 3);
  pts << 0, 0, 3.5;
  const Points2 px = project(pts, Camera{}, Viewport{64, 48});
  EXPECT_EQ(px(0, 0), 32.0);
  EXPECT_EQ(px(0, 1), 24.0);
}

TEST(Project, ScaleDoublesDistanceFromCentre) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.5);
  Vertices pts(20, 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = n(rng);
  const Viewport vp{80, 60};
  const Points2 a = project(pts, {0.7, 0, 0}, vp);
  const Points2 b = project(pts, {1.4, 0, 0}, vp);
  const Eigen::RowVector2d c(40, 30);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR((b.row(i) - c).norm(), 2 * (a.row(i) - c).norm(), 1e-12);
}

TEST(Project, MatchesScalarLoopAndTranslatesInPlane) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.5);
  Vertices pts(50, 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = n(rng);
  const Camera cam{1.3, 0.1, -0.2};
  const Points2 px = project(pts, cam, {100, 70});
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d o = oracle::project_point(pts.row(i).transpose(), cam, 100, 70);
    EXPECT_NEAR(px(i, 0), o.x(), 1e-12);
    EXPECT_NEAR(px(i, 1), o.y(), 1e-12);
  }
  Camera moved = cam;
  moved.tx += 0.25;
  const Points2 shifted = project(pts, moved, {100, 70});
  for (int i = 0; i < 50; ++i) {
    EXPECT_NEAR(shifted(i, 0) - px(i, 0), cam.scale * 0.25 * 35.0, 1e-12);
    EXPECT_NEAR(shifted(i, 1), px(i, 1), 1e-12);
  }
}

TEST(Project, RejectsNonPositiveScale) {
  EXPECT_THROW(project(Vertices::Zero(1, 3), {0.0, 0, 0}, {8, 8}), InputError);
}

TEST(ProjectVjp, FiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.5);
  Vertices pts(6, 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = n(rng);
  Points2 cot(6, 2);
  for (Eigen::Index i = 0; i < cot.size(); ++i) cot.data()[i] = n(rng);
  const Camera cam{1.1, 0.2, -0.1};
  const Viewport vp{40, 30};
  const ProjectionGradient g = project_vjp(pts, cam, vp, cot);
  auto value = [&](const Vertices& p, const Camera& c) { return (project(p, c, vp).array() * cot.array()).sum(); };
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < pts.size(); ++i) {
    Vertices a = pts, b = pts;
    a.data()[i] += h;
    b.data()[i] -= h;
    EXPECT_NEAR(g.d_points.data()[i], (value(a, cam) - value(b, cam)) / (2 * h), 1e-6);
  }
  for (int k = 0; k < 3; ++k) {
    Camera a = cam, b = cam;
    double* pa[3] = {&a.scale, &a.tx, &a.ty};
    double* pb[3] = {&b.scale, &b.tx, &b.ty};
    *pa[k] += h;
    *pb[k] -= h;
    EXPECT_NEAR(g.d_camera[k], (value(pts, a) - value(pts, b)) / (2 * h), 1e-5);
  }
}

TEST(RegressJoints, OneHotUniformAndDense) {
  BodyTemplate b = humanoid();
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < kNumJoints; ++j) trip.emplace_back(j, 10 * j + 3, 1.0);
  b.joint_regressor.setFromTriplets(trip.begin(), trip.end());
  const TriangleMesh m{b.template_vertices, b.faces};
  const Vertices sel = regress_joints(m, b);
  for (int j = 0; j < kNumJoints; ++j) EXPECT_EQ(sel.row(j), b.template_vertices.row(10 * j + 3));

  trip.clear();
  const int nv = b.num_vertices();
  for (int v = 0; v < nv; ++v) trip.emplace_back(0, v, 1.0 / nv);
  b.joint_regressor.setZero();
  b.joint_regressor.setFromTriplets(trip.begin(), trip.end());
  const Vertices mean = regress_joints(m, b);
  EXPECT_LT((mean.row(0) - b.template_vertices.colwise().mean()).norm(), 1e-12);

  const BodyTemplate& h = humanoid();
  const Eigen::MatrixXd dense = Eigen::MatrixXd(h.joint_regressor) * h.template_vertices;
  EXPECT_LT((regress_joints(m, h) - dense).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TemplateIo, ContainerRoundTrip) {
  const BodyTemplate& b = humanoid();
  const auto path = std::filesystem::temp_directory_path() / "dsr_test_template.dsrt";
  save_template(path, b);
  const BodyTemplate c = load_template(path);
  EXPECT_EQ(c.template_vertices, b.template_vertices);
  EXPECT_EQ(c.faces, b.faces);
  EXPECT_EQ(c.skin_weights, b.skin_weights);
  EXPECT_EQ(c.shape_dirs, b.shape_dirs);
  EXPECT_EQ(c.part_labels, b.part_labels);
  EXPECT_EQ(c.parents, b.parents);
  EXPECT_EQ(Eigen::MatrixXd(c.joint_regressor), Eigen::MatrixXd(b.joint_regressor));
  std::filesystem::remove(path);
}

TEST(TemplateIo, ObjAndParamsRoundTrip) {
  const BodyTemplate& b = humanoid();
  const auto dir = std::filesystem::temp_directory_path();
  const TriangleMesh m{b.template_vertices, b.faces};
  write_obj(dir / "dsr_test_mesh.obj", m);
  const TriangleMesh r = read_obj(dir / "dsr_test_mesh.obj");
  EXPECT_EQ(r.faces, m.faces);
  EXPECT_EQ(r.vertices, m.vertices);
  std::mt19937_64 rng(11);
  const BodyParams p = random_params(rng);
  write_params(dir / "dsr_test_params.json", p);
  const BodyParams q = read_params(dir / "dsr_test_params.json");
  EXPECT_EQ(q.theta, p.theta);
  EXPECT_EQ(q.beta, p.beta);
  EXPECT_EQ(q.camera.scale, p.camera.scale);
  EXPECT_THROW(read_params(dir / "dsr_test_no_such_file.json"), InputError);
}

#include "dsr/fixtures.h"

#include <array>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace dsr {
namespace {

bool left_side(int joint) {
  if (joint >= 16) return joint % 2 == 0;
  return joint % 3 == 1;  // hips 1, knees 4, ankles 7, feet 10; collars 13
}

}  // namespace

Outfit random_outfit(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> sleeves(0, 1), lower(0, 2);
  Outfit o;
  o.sleeves = static_cast<Sleeves>(sleeves(rng));
  o.lower = static_cast<LowerGarment>(lower(rng));
  return o;
}

namespace {

int garment_label(int joint, double along, double facing_z, const Outfit& outfit) {
  const bool left = left_side(joint);
  const int arm = left ? kLeftArm : kRightArm;
  const int leg = left ? kLeftLeg : kRightLeg;
  const int shoe = left ? kLeftShoe : kRightShoe;
  const int lower = outfit.lower == LowerGarment::kSkirt ? kSkirt : kPants;
  switch (joint) {
    case 15:
      return facing_z < 0.0 ? kFace : kHair;
    case 12:
      return kFace;
    case 0:
      return along < 0.5 ? lower : kUpperClothes;
    case 3: case 6: case 9: case 13: case 14:
      return kUpperClothes;
    case 16: case 17:
      return outfit.sleeves == Sleeves::kLong || along < 0.5 ? kUpperClothes : arm;
    case 18: case 19:
      return outfit.sleeves == Sleeves::kLong ? kUpperClothes : arm;
    case 20: case 21: case 22: case 23:
      return arm;
    case 1: case 2:
      return lower;
    case 4: case 5:
      return outfit.lower == LowerGarment::kPants ? kPants : leg;
    default:  // ankles and toes
      return shoe;
  }
}

}  // namespace

std::vector<int> paint_face_labels(const BodyTemplate& body, const HumanoidInfo& info,
                                   const Outfit& outfit) {
  DSR_CHECK_INPUT(static_cast<int>(info.segment_joint.size()) == body.num_vertices(),
                  "humanoid info does not match the template");
  std::vector<int> out(body.faces.rows());
  for (Eigen::Index f = 0; f < body.faces.rows(); ++f) {
    double along = 1.0, facing = 0.0;
    for (int k = 0; k < 3; ++k) {
      const int v = body.faces(f, k);
      along = std::min(along, info.along[v]);
      facing += info.radial(v, 2);
    }
    out[f] = garment_label(info.segment_joint[body.faces(f, 0)], along, facing, outfit);
  }
  return out;
}

LabelMask render_label_image(const TriangleMesh& mesh, const std::vector<int>& face_labels,
                             const Camera& camera, int width, int height) {
  DSR_CHECK_INPUT(static_cast<Eigen::Index>(face_labels.size()) == mesh.faces.rows(),
                  "{} face labels for {} faces", face_labels.size(), mesh.faces.rows());
  RasterConfig cfg;
  cfg.width = width;
  cfg.height = height;
  const HardRaster raster = rasterize_hard(mesh, camera, cfg);
  LabelMask out;
  out.labels = Image<std::uint8_t>(width, height);
  out.provenance = "synthetic";
  for (std::size_t i = 0; i < out.labels.data.size(); ++i) {
    const int f = raster.face_index.data[i];
    if (f != kNoFace) out.labels.data[i] = static_cast<std::uint8_t>(face_labels[f]);
  }
  return out;
}

Camera default_camera() { return {0.95, 0.0, -0.06}; }

Eigen::VectorXd random_pose(std::mt19937_64& rng, double sigma, double yaw) {
  std::normal_distribution<double> n(0.0, sigma);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kNumPoseParams);
  for (int i = 3; i < kNumPoseParams; ++i) theta[i] = n(rng);
  theta[1] = yaw;
  return theta;
}

ScanSet make_scan_set(const BodyTemplate& body, const HumanoidInfo& info,
                      const ScanSetOptions& options, std::uint64_t seed) {
  DSR_CHECK_INPUT(options.num_subjects > 0 && options.views_per_subject > 0,
                  "scan set needs at least one subject and one view");
  DSR_CHECK_INPUT(options.label_noise >= 0.0 && options.label_noise <= 1.0,
                  "label noise must be in [0, 1]");
  std::mt19937_64 rng(seed);
  ScanSet out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_label(1, kNumLabels - 1);
  std::normal_distribution<double> shape(0.0, 0.5);
  for (int s = 0; s < options.num_subjects; ++s) {
    const Outfit outfit = random_outfit(rng);
    out.outfits.push_back(outfit);
    const auto faces = paint_face_labels(body, info, outfit);
    BodyParams params;
    params.camera = default_camera();
    for (int k = 0; k < kNumShapeParams; ++k) params.beta[k] = shape(rng);
    const Eigen::VectorXd pose = random_pose(rng, options.pose_sigma, 0.0);
    for (int view = 0; view < options.views_per_subject; ++view) {
      params.theta = pose;
      params.theta[1] = 2.0 * std::numbers::pi * view / options.views_per_subject;
      ScanObservation obs;
      obs.mesh = forward(body, params);
      obs.camera = params.camera;
      obs.label_image = render_label_image(obs.mesh, faces, params.camera, options.width,
                                           options.height);
      obs.label_image.provenance = fmt::format("subject{}_view{}", s, view);
      for (auto& px : obs.label_image.labels.data) {
        if (px != kBackground && unit(rng) < options.label_noise) {
          px = static_cast<std::uint8_t>(any_label(rng));
        }
      }
      out.observations.push_back(std::move(obs));
    }
  }
  return out;
}

SyntheticInstance make_instance(const BodyTemplate& body, const HumanoidInfo& info,
                                const InstanceOptions& options, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> yaw(-0.5, 0.5);
  std::normal_distribution<double> shape(0.0, options.gt_shape_sigma);
  std::normal_distribution<double> noise(0.0, options.init_pose_sigma);
  SyntheticInstance inst;
  inst.outfit = random_outfit(rng);
  inst.gt.theta = random_pose(rng, options.gt_pose_sigma, yaw(rng));
  for (int k = 0; k < kNumShapeParams; ++k) inst.gt.beta[k] = shape(rng);
  inst.gt.camera = default_camera();
  inst.gt_mesh = forward(body, inst.gt);

  const auto faces = paint_face_labels(body, info, inst.outfit);
  inst.label_image =
      render_label_image(inst.gt_mesh, faces, inst.gt.camera, options.width, options.height);

  const Vertices j3d = regress_joints(inst.gt_mesh, body);
  const Points2 j2d = project(j3d, inst.gt.camera, {options.width, options.height});
  inst.joints.joints_3d = j3d;
  inst.joints.joints_2d = j2d;
  inst.joints.confidence = Eigen::VectorXd::Ones(j3d.rows());
  inst.keypoints = Keypoints(j2d.rows(), 3);
  inst.keypoints.leftCols<2>() = j2d;
  inst.keypoints.col(2).setOnes();
  inst.targets = build_sample_targets(inst.label_image, inst.keypoints);

  inst.init = inst.gt;
  for (int i = 0; i < kNumPoseParams; ++i) inst.init.theta[i] += noise(rng);
  return inst;
}

}  // namespace dsr

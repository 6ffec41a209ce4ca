#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dsr/losses.h"
#include "dsr/mask_pipeline.h"
#include "dsr/semantic_prior.h"
#include "dsr/soft_raster.h"
#include "dsr/template_gen.h"

namespace dsr {

enum class Sleeves { kLong, kShort };
enum class LowerGarment { kPants, kShorts, kSkirt };

struct Outfit {
  Sleeves sleeves = Sleeves::kLong;
  LowerGarment lower = LowerGarment::kPants;
};

Outfit random_outfit(std::mt19937_64& rng);

// Fine label per template face for a humanoid dressed in `outfit`. A face is
// judged by its lowest ring position along the segment and its mean outward
// direction, so garment borders follow ring bands.
std::vector<int> paint_face_labels(const BodyTemplate& body, const HumanoidInfo& info,
                                   const Outfit& outfit);

// Hard-rendered label image: each covered pixel takes its visible face's label.
LabelMask render_label_image(const TriangleMesh& mesh, const std::vector<int>& face_labels,
                             const Camera& camera, int width, int height);

// Camera placing the rest-pose humanoid in the middle of the frame.
Camera default_camera();

struct ScanSetOptions {
  int num_subjects = 8;
  int views_per_subject = 10;
  int width = 128;
  int height = 128;
  double pose_sigma = 0.15;
  // Fraction of covered pixels replaced by a random label.
  double label_noise = 0.02;
};

struct ScanSet {
  std::vector<ScanObservation> observations;
  std::vector<Outfit> outfits;  // one per subject
};

ScanSet make_scan_set(const BodyTemplate& body, const HumanoidInfo& info,
                      const ScanSetOptions& options, std::uint64_t seed);

struct InstanceOptions {
  int width = 128;
  int height = 128;
  double gt_pose_sigma = 0.2;
  double gt_shape_sigma = 0.5;
  double init_pose_sigma = 0.1;
};

// Ground truth, its rendered targets, and a perturbed starting point.
struct SyntheticInstance {
  BodyParams gt;
  BodyParams init;
  TriangleMesh gt_mesh;
  Outfit outfit;
  LabelMask label_image;
  Keypoints keypoints;
  JointTargets joints;
  SampleTargets targets;
};

SyntheticInstance make_instance(const BodyTemplate& body, const HumanoidInfo& info,
                                const InstanceOptions& options, std::uint64_t seed);

// Randomly posed pose vector: root yaw plus Gaussian limb rotations.
Eigen::VectorXd random_pose(std::mt19937_64& rng, double sigma, double yaw);

}  // namespace dsr

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsr/body_model.h"
#include "dsr/labels.h"

namespace dsr {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, kNumLabels, Eigen::RowMajor>;

inline constexpr double kDefaultBackgroundFloor = 0.05;

// Per-vertex distribution over the 20 fine labels.
struct VertexLabelPrior {
  RowMatrix probs;  // V x 20
  LabelSet label_set = LabelSet::universal();
  double epsilon_bg = kDefaultBackgroundFloor;

  int num_vertices() const { return static_cast<int>(probs.rows()); }
  // Rows stochastic within 1e-6, entries in [0, 1].
  void validate() const;
};

// One labeled view of a registered body mesh.
struct ScanObservation {
  TriangleMesh mesh;
  Camera camera;
  LabelMask label_image;
};

// Hard-rasterizes the observation and, for every covered pixel, adds one count
// of that pixel's label to each vertex of the visible face.
void accumulate_counts(const ScanObservation& obs, CountMatrix& counts);

// Sums counts over many observations; the result does not depend on order.
CountMatrix accumulate_all(std::span<const ScanObservation> observations, int num_vertices);

// Garment labels are normalized over non-background counts and scaled by
// (1 - epsilon_bg); Background gets epsilon_bg. Rows without garment counts
// fall back to a uniform garment distribution.
VertexLabelPrior normalize_counts(const CountMatrix& counts, double epsilon_bg);

// Body part id -> labels that part may not carry.
using Incompatibility = std::map<int, std::vector<int>>;

// Parts are SMPL joint ids. Legs forbid arm and glove labels, arms forbid leg,
// shoe and sock labels, head parts forbid limb skin labels.
Incompatibility default_incompatibility();
Incompatibility incompatibility_from_json(const nlohmann::json& j, const LabelSet& labels);

struct CleaningReport {
  std::vector<int> fallback_vertices;  // rows reset to uniform-over-allowed
};

VertexLabelPrior clean_with_part_segmentation(const VertexLabelPrior& prior,
                                              const std::vector<int>& part_labels,
                                              const Incompatibility& incompatibility,
                                              CleaningReport* report = nullptr);

// V x C coarse prior: each coarse column sums its member fine columns.
RowMatrix aggregate_labels(const VertexLabelPrior& prior, const CoarseScheme& scheme);

void save_prior(const std::filesystem::path& path, const VertexLabelPrior& prior);
VertexLabelPrior load_prior(const std::filesystem::path& path);
void export_prior_csv(const std::filesystem::path& path, const VertexLabelPrior& prior);

}  // namespace dsr

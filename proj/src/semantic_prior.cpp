#include "dsr/semantic_prior.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dsr/container.h"
#include "dsr/parallel.h"
#include "dsr/soft_raster.h"

namespace dsr {

void VertexLabelPrior::validate() const {
  label_set.validate();
  DSR_CHECK_INPUT(probs.cols() == kNumLabels, "prior must have {} columns, got {}", kNumLabels,
                  probs.cols());
  for (Eigen::Index v = 0; v < probs.rows(); ++v) {
    DSR_CHECK_INPUT(probs.row(v).minCoeff() >= 0.0 && probs.row(v).maxCoeff() <= 1.0,
                    "prior row {} has entries outside [0, 1]", v);
    DSR_CHECK_INPUT(std::abs(probs.row(v).sum() - 1.0) <= 1e-6, "prior row {} sums to {}", v,
                    probs.row(v).sum());
  }
}

void accumulate_counts(const ScanObservation& obs, CountMatrix& counts) {
  DSR_CHECK_INPUT(counts.rows() == obs.mesh.vertices.rows(),
                  "count matrix has {} rows, mesh has {} vertices", counts.rows(),
                  obs.mesh.vertices.rows());
  obs.label_image.validate();
  RasterConfig cfg;
  cfg.width = obs.label_image.labels.width;
  cfg.height = obs.label_image.labels.height;
  const HardRaster raster = rasterize_hard(obs.mesh, obs.camera, cfg);
  for (int r = 0; r < cfg.height; ++r) {
    for (int c = 0; c < cfg.width; ++c) {
      const int f = raster.face_index(r, c);
      if (f == kNoFace) continue;
      const int label = obs.label_image.labels(r, c);
      for (int k = 0; k < 3; ++k) ++counts(obs.mesh.faces(f, k), label);
    }
  }
}

CountMatrix accumulate_all(std::span<const ScanObservation> observations, int num_vertices) {
  std::vector<CountMatrix> partial(observations.size());
  parallel_for(static_cast<int>(observations.size()), [&](int i) {
    partial[i] = CountMatrix::Zero(num_vertices, kNumLabels);
    accumulate_counts(observations[i], partial[i]);
  });
  CountMatrix total = CountMatrix::Zero(num_vertices, kNumLabels);
  for (const auto& p : partial) total += p;
  return total;
}

VertexLabelPrior normalize_counts(const CountMatrix& counts, double epsilon_bg) {
  DSR_CHECK_INPUT(epsilon_bg >= 0.0 && epsilon_bg < 0.5,
                  "background floor must be in [0, 0.5), got {}", epsilon_bg);
  VertexLabelPrior prior;
  prior.epsilon_bg = epsilon_bg;
  prior.probs = RowMatrix::Zero(counts.rows(), kNumLabels);
  const double garment_share = 1.0 - epsilon_bg;
  for (Eigen::Index v = 0; v < counts.rows(); ++v) {
    std::int64_t total = 0;
    for (int l = 1; l < kNumLabels; ++l) total += counts(v, l);
    prior.probs(v, kBackground) = epsilon_bg;
    for (int l = 1; l < kNumLabels; ++l) {
      const double raw = total > 0 ? static_cast<double>(counts(v, l)) / static_cast<double>(total)
                                   : 1.0 / (kNumLabels - 1);
      prior.probs(v, l) = garment_share * raw;
    }
  }
  return prior;
}

Incompatibility default_incompatibility() {
  const std::vector<int> legs = {1, 2, 4, 5, 7, 8, 10, 11};
  const std::vector<int> arms = {13, 14, 16, 17, 18, 19, 20, 21, 22, 23};
  const std::vector<int> head = {12, 15};
  Incompatibility table;
  for (int p : legs) table[p] = {kLeftArm, kRightArm, kGlove};
  for (int p : arms) table[p] = {kLeftLeg, kRightLeg, kLeftShoe, kRightShoe, kSocks};
  for (int p : head) table[p] = {kLeftArm, kRightArm, kLeftLeg, kRightLeg};
  return table;
}

Incompatibility incompatibility_from_json(const nlohmann::json& j, const LabelSet& labels) {
  Incompatibility table;
  try {
    for (const auto& [part, names] : j.items()) {
      auto& forbidden = table[std::stoi(part)];
      for (const auto& name : names) forbidden.push_back(labels.index_of(name.get<std::string>()));
    }
  } catch (const std::logic_error& e) {
    throw InputError(fmt::format("malformed incompatibility table: {}", e.what()));
  }
  return table;
}

VertexLabelPrior clean_with_part_segmentation(const VertexLabelPrior& prior,
                                              const std::vector<int>& part_labels,
                                              const Incompatibility& incompatibility,
                                              CleaningReport* report) {
  DSR_CHECK_INPUT(static_cast<Eigen::Index>(part_labels.size()) == prior.probs.rows(),
                  "part labels have {} entries, prior has {} rows", part_labels.size(),
                  prior.probs.rows());
  for (const auto& [part, forbidden] : incompatibility) {
    for (int l : forbidden) {
      DSR_CHECK_INPUT(l > kBackground && l < kNumLabels,
                      "part {} forbids label {}, which is not a garment label", part, l);
    }
  }
  VertexLabelPrior out = prior;
  for (Eigen::Index v = 0; v < out.probs.rows(); ++v) {
    const auto it = incompatibility.find(part_labels[v]);
    if (it == incompatibility.end()) continue;
    auto row = out.probs.row(v);
    double removed = 0.0;
    for (int l : it->second) {
      removed += row[l];
      row[l] = 0.0;
    }
    if (removed == 0.0) continue;
    const double bg = row[kBackground];
    const double target = 1.0 - bg;
    const double remaining = row.sum() - bg;
    if (remaining > 0.0) {
      for (int l = 1; l < kNumLabels; ++l) row[l] *= target / remaining;
      continue;
    }
    const int allowed = kNumLabels - 1 - static_cast<int>(it->second.size());
    for (int l = 1; l < kNumLabels; ++l) row[l] = target / allowed;
    for (int l : it->second) row[l] = 0.0;
    log_warning(fmt::format("prior row {} had only forbidden labels; reset to uniform over {} "
                            "allowed labels",
                            v, allowed));
    if (report) report->fallback_vertices.push_back(static_cast<int>(v));
  }
  return out;
}

RowMatrix aggregate_labels(const VertexLabelPrior& prior, const CoarseScheme& scheme) {
  scheme.validate();
  DSR_CHECK_INPUT(prior.probs.cols() == kNumLabels, "prior must have {} columns", kNumLabels);
  RowMatrix out = RowMatrix::Zero(prior.probs.rows(), scheme.size());
  for (int c = 0; c < scheme.size(); ++c) {
    for (int l : scheme.members[c]) out.col(c) += prior.probs.col(l);
  }
  return out;
}

void save_prior(const std::filesystem::path& path, const VertexLabelPrior& prior) {
  Container c;
  c.meta = {{"kind", "vertex_label_prior"},
            {"num_vertices", prior.probs.rows()},
            {"num_labels", prior.probs.cols()},
            {"label_names", prior.label_set.names},
            {"epsilon_bg", prior.epsilon_bg}};
  c.put_f64("probs", {prior.probs.rows(), prior.probs.cols()},
            std::span(prior.probs.data(), prior.probs.size()));
  c.write(path);
}

VertexLabelPrior load_prior(const std::filesystem::path& path) {
  const Container c = Container::read(path);
  DSR_CHECK_INPUT(c.meta.value("kind", "") == "vertex_label_prior",
                  "'{}' is not a vertex label prior", path.string());
  VertexLabelPrior prior;
  prior.label_set.names = c.meta.at("label_names").get<std::vector<std::string>>();
  prior.epsilon_bg = c.meta.at("epsilon_bg").get<double>();
  const auto shape = c.shape("probs");
  DSR_CHECK_INPUT(shape.size() == 2 && shape[1] == kNumLabels, "probs must be Vx{}", kNumLabels);
  const auto values = c.get_f64("probs");
  prior.probs = Eigen::Map<const RowMatrix>(values.data(), shape[0], shape[1]);
  prior.validate();
  return prior;
}

void export_prior_csv(const std::filesystem::path& path, const VertexLabelPrior& prior) {
  std::ofstream out(path);
  DSR_CHECK_INPUT(out.good(), "cannot open '{}' for writing", path.string());
  out << "vertex";
  for (const auto& n : prior.label_set.names) out << ',' << n;
  out << '\n';
  for (Eigen::Index v = 0; v < prior.probs.rows(); ++v) {
    out << v;
    for (Eigen::Index l = 0; l < prior.probs.cols(); ++l) out << fmt::format(",{:.9g}", prior.probs(v, l));
    out << '\n';
  }
}

}  // namespace dsr

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dsr/container.h"
#include "dsr/fitter.h"
#include "dsr/fixtures.h"
#include "dsr/gradcheck.h"
#include "dsr/image_io.h"
#include "dsr/mask_pipeline.h"
#include "dsr/mesh_io.h"
#include "dsr/parallel.h"
#include "dsr/semantic_prior.h"
#include "dsr/soft_raster.h"
#include "dsr/template_gen.h"

namespace fs = std::filesystem;
using namespace dsr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitSkipped = 4;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> labels_from_names(const std::vector<std::string>& names) {
  const LabelSet set = LabelSet::universal();
  const auto& mc = minimal_clothing_labels();
  std::vector<int> out;
  for (const auto& n : names) {
    const int l = set.index_of(n);
    DSR_CHECK_INPUT(std::find(mc.begin(), mc.end(), l) != mc.end(),
                    "'{}' is not a minimal-clothing label", n);
    out.push_back(l);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> labels_from_meta(const fs::path& path) {
  const auto j = read_json(path);
  DSR_CHECK_INPUT(j.contains("valid_mc_labels"), "{}: missing 'valid_mc_labels'", path.string());
  return labels_from_names(j["valid_mc_labels"].get<std::vector<std::string>>());
}

LabelMask read_label_mask(const fs::path& path) {
  LabelMask m{read_label_png(path), path.string()};
  m.validate();
  return m;
}

nlohmann::json channel_sums(const Image<double>& img) {
  std::vector<double> sums(img.channels, 0.0);
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < img.channels; ++c) sums[c] += img.data[i * img.channels + c];
  return sums;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  DSR_CHECK_INPUT(out.good(), "cannot open '{}' for writing", path.string());
  out << text;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// ---- build-prior

struct BuildPriorArgs {
  std::string scans;
  std::string out;
  std::string template_path;
  std::string incompatibility;
  std::string csv;
  double eps_bg = kDefaultBackgroundFloor;
};

int cmd_build_prior(const BuildPriorArgs& a) {
  DSR_CHECK_INPUT(a.eps_bg >= 0.0 && a.eps_bg < 0.5, "--eps-bg must be in [0, 0.5), got {}",
                  a.eps_bg);
  DSR_CHECK_INPUT(fs::is_directory(a.scans), "scan directory '{}' does not exist", a.scans);
  std::vector<fs::path> objs;
  for (const auto& e : fs::directory_iterator(a.scans))
    if (e.is_regular_file() && e.path().extension() == ".obj") objs.push_back(e.path());
  std::sort(objs.begin(), objs.end());
  DSR_CHECK_INPUT(!objs.empty(), "no .obj scans in '{}'", a.scans);

  std::optional<BodyTemplate> body;
  if (!a.template_path.empty()) body = load_template(a.template_path);

  std::vector<ScanObservation> obs;
  for (const auto& p : objs) {
    fs::path stem = p;
    stem.replace_extension();
    ScanObservation o;
    o.mesh = read_obj(p);
    o.camera = camera_from_json(read_json(stem.string() + ".camera.json"));
    o.label_image = read_label_mask(stem.string() + ".png");
    DSR_CHECK_INPUT(obs.empty() || o.mesh.vertices.rows() == obs.front().mesh.vertices.rows(),
                    "{}: vertex count differs from the first scan", p.string());
    obs.push_back(std::move(o));
  }
  const int nv = static_cast<int>(obs.front().mesh.vertices.rows());
  if (body) {
    DSR_CHECK_INPUT(body->num_vertices() == nv, "template has {} vertices, scans {}",
                    body->num_vertices(), nv);
  }

  const CountMatrix counts = accumulate_all(obs, nv);
  VertexLabelPrior prior = normalize_counts(counts, a.eps_bg);
  nlohmann::json summary = {{"scans", obs.size()}, {"vertices", nv}};
  if (body) {
    const Incompatibility inc =
        a.incompatibility.empty()
            ? default_incompatibility()
            : incompatibility_from_json(read_json(a.incompatibility), LabelSet::universal());
    CleaningReport report;
    prior = clean_with_part_segmentation(prior, body->part_labels, inc, &report);
    summary["cleaned"] = true;
    summary["fallback_vertices"] = report.fallback_vertices.size();
  } else {
    summary["cleaned"] = false;
  }
  ensure_parent(a.out);
  save_prior(a.out, prior);
  if (!a.csv.empty()) export_prior_csv(a.csv, prior);
  std::cout << summary.dump() << '\n';
  return kExitOk;
}

// ---- clean-mask

struct CleanMaskArgs {
  std::string mask;
  std::string keypoints;
  std::string out_dir;
  std::string name;
  int crop_offset = MaskPipelineOptions{}.crop_offset;
  int min_pixels = MaskPipelineOptions{}.min_pixels;
};

int cmd_clean_mask(const CleanMaskArgs& a) {
  const LabelMask mask = read_label_mask(a.mask);
  const Keypoints kp = keypoints_from_json(read_json(a.keypoints));
  MaskPipelineOptions opt;
  opt.crop_offset = a.crop_offset;
  opt.min_pixels = a.min_pixels;
  const SampleTargets t = build_sample_targets(mask, kp, opt);
  std::string name = a.name;
  if (name.empty()) {
    name = fs::path(a.mask).stem().string();
  }
  write_sample_targets(a.out_dir, name, t);
  std::cout << targets_meta(t, LabelSet::universal()).dump() << '\n';
  return t.valid ? kExitOk : kExitSkipped;
}

// ---- render

struct RenderArgs {
  std::string template_path;
  std::string params;
  std::string prior;
  std::string mode = "mc";
  std::string out;
  std::string preview;
  std::string mc_labels = "LeftArm,RightArm,LeftShoe,RightShoe,Face";
  std::string meta;
  int width = 128;
  int height = 128;
  double sigma = 1e-5;
  double gamma = 1e-1;
};

int cmd_render(const RenderArgs& a) {
  DSR_CHECK_INPUT(a.mode == "mc" || a.mode == "c" || a.mode == "hard",
                  "--mode must be mc, c or hard, got '{}'", a.mode);
  RasterConfig cfg;
  cfg.width = a.width;
  cfg.height = a.height;
  cfg.sigma = a.sigma;
  cfg.gamma = a.gamma;
  cfg.validate();
  const BodyTemplate body = load_template(a.template_path);
  const BodyParams params = read_params(a.params);
  const TriangleMesh mesh = forward(body, params);
  const HardRaster hard = rasterize_hard(mesh, params.camera, cfg);

  Image<double> img;
  std::vector<std::string> names;
  if (a.mode == "hard") {
    img = Image<double>(cfg.width, cfg.height, 1);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = hard.face_index.data[i];
    names = {"face_index"};
  } else {
    DSR_CHECK_INPUT(!a.prior.empty(), "--prior is required for mode '{}'", a.mode);
    const VertexLabelPrior prior = load_prior(a.prior);
    DSR_CHECK_INPUT(prior.num_vertices() == body.num_vertices(),
                    "prior has {} vertices, template {}", prior.num_vertices(), body.num_vertices());
    RowMatrix attr;
    if (a.mode == "mc") {
      const std::vector<int> labels =
          a.meta.empty() ? labels_from_names(split_list(a.mc_labels)) : labels_from_meta(a.meta);
      attr = mc_attributes(prior, labels);
      names = {"minimal_clothing"};
    } else {
      attr = c_attributes(prior);
      names = clothing_scheme().names;
    }
    ProbImage p = render_semantic_channels(mesh, attr, visible_vertices(hard, mesh), params.camera,
                                           cfg);
    img = std::move(p.image);
  }
  ensure_parent(a.out);
  write_pfm(a.out, img);
  if (!a.preview.empty()) {
    Image<double> ch(img.width, img.height, 1);
    for (std::size_t i = 0; i < ch.data.size(); ++i) {
      const double v = img.data[i * img.channels];
      ch.data[i] = a.mode == "hard" ? (v >= 0 ? 1.0 : 0.0) : v;
    }
    write_preview_png(a.preview, ch);
  }
  std::cout << nlohmann::json{{"mode", a.mode}, {"channels", names}, {"sums", channel_sums(img)}}.dump()
            << '\n';
  return kExitOk;
}

// ---- fit

struct FitArgs {
  std::string template_path;
  std::string init;
  std::string joints;
  std::string mc;
  std::string c;
  std::string meta;
  std::string mc_labels;
  std::string prior;
  std::string gt;
  std::string out;
  std::string trace;
  std::string render_dir;
  std::string optimizer = "adam";
  std::string mc_metric = "siou";
  std::string free = "theta,beta,camera";
  int iters = 100;
  std::optional<int> warmup;
  int render_every = 0;
  int width = 128;
  int height = 128;
  double lr = 1e-2;
  double adam_eps = 1e-8;
  double sigma = 1e-5;
  double gamma = 1e-1;
  LossWeights weights;
  bool sum_reduction = false;
  bool no_dsr = false;
};

ParamMask parse_free(const std::string& s) {
  ParamMask m{false, false, false};
  for (const auto& g : split_list(s)) {
    if (g == "theta") m.theta = true;
    else if (g == "beta") m.beta = true;
    else if (g == "camera") m.camera = true;
    else throw InputError(fmt::format("--free: unknown group '{}'", g));
  }
  return m;
}

int cmd_fit(const FitArgs& a) {
  FitSchedule s;
  s.iterations = a.iters;
  s.warmup = a.warmup.value_or(default_warmup(a.iters));
  s.step_size = a.lr;
  s.adam_eps = a.adam_eps;
  s.optimizer = optimizer_from_string(a.optimizer);
  s.mc_metric = mc_metric_from_string(a.mc_metric);
  s.weights = a.weights;
  s.free = parse_free(a.free);
  s.sum_reduction = a.sum_reduction;
  s.enable_dsr = !a.no_dsr;
  s.validate();
  DSR_CHECK_INPUT(a.render_every >= 0, "--render-every must be >= 0");

  const BodyTemplate body = load_template(a.template_path);
  const BodyParams init = read_params(a.init);

  FitProblem pb;
  pb.body = &body;
  pb.raster.sigma = a.sigma;
  pb.raster.gamma = a.gamma;
  pb.raster.width = a.width;
  pb.raster.height = a.height;
  if (!a.joints.empty()) pb.targets.joints = joint_targets_from_json(read_json(a.joints));
  if (!a.mc.empty()) {
    LabelMask m = read_label_mask(a.mc);
    DSR_CHECK_INPUT(a.meta.empty() != a.mc_labels.empty(),
                    "--mc needs exactly one of --meta or --mc-labels");
    pb.targets.valid_mc_labels =
        a.meta.empty() ? labels_from_names(split_list(a.mc_labels)) : labels_from_meta(a.meta);
    pb.raster.width = m.labels.width;
    pb.raster.height = m.labels.height;
    pb.targets.mc_mask = std::move(m.labels);
  }
  if (!a.c.empty()) {
    Image<std::uint8_t> c = read_label_png(a.c);
    if (pb.targets.mc_mask) {
      DSR_CHECK_INPUT(c.same_shape(pb.raster.width, pb.raster.height),
                      "'{}' is {}x{}, the MC mask {}x{}", a.c, c.width, c.height, pb.raster.width,
                      pb.raster.height);
    }
    pb.raster.width = c.width;
    pb.raster.height = c.height;
    pb.targets.c_mask = std::move(c);
  }
  std::optional<VertexLabelPrior> prior;
  if (!a.prior.empty()) {
    prior = load_prior(a.prior);
    pb.prior = &*prior;
  }
  pb.validate();
  std::optional<TriangleMesh> gt_mesh;
  if (!a.gt.empty()) gt_mesh = forward(body, read_params(a.gt));

  // Samples whose only targets are semantic ones that the mask pipeline
  // rejected produce no update.
  const auto& jt = pb.targets.joints;
  const bool has_joint_terms = jt.joints_2d || jt.joints_3d || jt.params;
  if (!has_joint_terms) {
    FitSchedule probe = s;
    probe.warmup = 0;
    const Objective o = evaluate_objective(pb, probe, init, 0, false);
    if (!s.enable_dsr || !(o.mc_evaluated || o.c_evaluated)) {
      nlohmann::json r = {{"params", params_to_json(init)}, {"skipped", true}, {"iterations", 0}};
      ensure_parent(a.out);
      write_json(a.out, r);
      std::cerr << "no active term for this sample; nothing fitted\n";
      return kExitSkipped;
    }
  }

  IterationCallback cb;
  if (a.render_every > 0) {
    const fs::path dir = a.render_dir.empty()
                             ? fs::path(a.out).parent_path() / (fs::path(a.out).stem().string() + "_renders")
                             : fs::path(a.render_dir);
    fs::create_directories(dir);
    cb = [&, dir](int it, const BodyParams& p) {
      if (it % a.render_every != 0) return;
      const TriangleMesh mesh = forward(body, p);
      const HardRaster hard = rasterize_hard(mesh, p.camera, pb.raster);
      const auto vis = visible_vertices(hard, mesh);
      const std::string base = fmt::format("iter_{:05d}", it);
      Image<double> sil(pb.raster.width, pb.raster.height, 1);
      const BinaryMask m = silhouette(hard);
      for (std::size_t i = 0; i < sil.data.size(); ++i) sil.data[i] = m.data[i];
      write_preview_png(dir / (base + ".silhouette.png"), sil);
      if (prior && pb.targets.mc_mask) {
        const ProbImage img = render_semantic_channels(
            mesh, mc_attributes(*prior, pb.targets.valid_mc_labels), vis, p.camera, pb.raster);
        write_pfm(dir / (base + ".mc.pfm"), img.image);
        write_preview_png(dir / (base + ".mc.png"), img.image);
      }
      if (prior && pb.targets.c_mask) {
        const ProbImage img =
            render_semantic_channels(mesh, c_attributes(*prior), vis, p.camera, pb.raster);
        write_pfm(dir / (base + ".c.pfm"), img.image);
      }
    };
  }

  const FitResult r = fit(pb, init, s, gt_mesh ? &*gt_mesh : nullptr, cb);
  nlohmann::json out = {{"params", params_to_json(r.params)},
                        {"iterations", r.trace.size()},
                        {"diverged", r.diverged},
                        {"skipped", false}};
  if (r.diverged) out["diagnostic"] = r.diagnostic;
  if (!r.trace.empty()) out["final"] = r.trace.back().to_json();
  if (r.metrics) {
    out["metrics"] = {{"pa_mpjpe", r.metrics->pa_mpjpe},
                      {"mpjpe", r.metrics->mpjpe},
                      {"pve", r.metrics->pve}};
  }
  ensure_parent(a.out);
  write_json(a.out, out);
  fs::path trace = a.trace;
  if (trace.empty()) {
    trace = fs::path(a.out);
    trace.replace_extension(".trace.jsonl");
  }
  write_text(trace, trace_to_jsonl(r.trace));
  if (r.diverged) {
    std::cerr << "fit diverged: " << r.diagnostic << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

// ---- gradcheck

struct GradcheckArgs {
  GradcheckOptions opt;
  std::string json;
};

int cmd_gradcheck(GradcheckArgs a, std::uint64_t seed) {
  a.opt.seed = seed;
  const GradcheckReport rep = run_gradcheck(a.opt);
  std::cout << rep.to_text();
  if (!a.json.empty()) {
    ensure_parent(a.json);
    write_json(a.json, rep.to_json());
  }
  return rep.passed() ? kExitOk : kExitNumerical;
}

// ---- make-fixture

struct FixtureArgs {
  std::string out_dir;
  int subjects = ScanSetOptions{}.num_subjects;
  int views = ScanSetOptions{}.views_per_subject;
  int size = 128;
  int instances = 1;
  int sides = HumanoidOptions{}.sides;
  int rings = HumanoidOptions{}.rings;
  double label_noise = ScanSetOptions{}.label_noise;
};

int cmd_make_fixture(const FixtureArgs& a, std::uint64_t seed) {
  DSR_CHECK_INPUT(a.subjects > 0 && a.views > 0 && a.instances >= 0,
                  "--subjects and --views must be positive, --instances >= 0");
  DSR_CHECK_INPUT(a.size >= 16 && a.size <= 4096, "--size must be in [16, 4096], got {}", a.size);
  DSR_CHECK_INPUT(a.label_noise >= 0.0 && a.label_noise <= 1.0,
                  "--label-noise must be in [0, 1], got {}", a.label_noise);
  HumanoidOptions ho;
  ho.sides = a.sides;
  ho.rings = a.rings;
  DSR_CHECK_INPUT(ho.sides >= 3 && ho.rings >= 2, "--sides must be >= 3 and --rings >= 2");
  HumanoidInfo info;
  const BodyTemplate body = make_humanoid(ho, &info);

  const fs::path root(a.out_dir);
  fs::create_directories(root / "scans");
  save_template(root / "template.dsrt", body);
  write_obj(root / "template.obj", {body.template_vertices, body.faces});

  std::mt19937_64 rng(seed);
  ScanSetOptions so;
  so.num_subjects = a.subjects;
  so.views_per_subject = a.views;
  so.width = so.height = a.size;
  so.label_noise = a.label_noise;
  const ScanSet scans = make_scan_set(body, info, so, rng());
  for (std::size_t i = 0; i < scans.observations.size(); ++i) {
    const auto& o = scans.observations[i];
    const std::string stem = fmt::format("scan_s{:03d}_v{:03d}", i / a.views, i % a.views);
    write_obj(root / "scans" / (stem + ".obj"), o.mesh);
    write_json(root / "scans" / (stem + ".camera.json"), camera_to_json(o.camera));
    write_label_png(root / "scans" / (stem + ".png"), o.label_image.labels);
  }

  InstanceOptions io;
  io.width = io.height = a.size;
  for (int k = 0; k < a.instances; ++k) {
    const SyntheticInstance inst = make_instance(body, info, io, rng());
    const fs::path dir = root / fmt::format("instance_{:03d}", k);
    fs::create_directories(dir);
    write_params(dir / "gt.json", inst.gt);
    write_params(dir / "init.json", inst.init);
    write_json(dir / "joints.json", joint_targets_to_json(inst.joints));
    nlohmann::json kp = nlohmann::json::array();
    for (Eigen::Index r = 0; r < inst.keypoints.rows(); ++r)
      kp.push_back({inst.keypoints(r, 0), inst.keypoints(r, 1), inst.keypoints(r, 2)});
    write_json(dir / "keypoints.json", {{"keypoints", kp}});
    write_label_png(dir / "labels.png", inst.label_image.labels);
    write_obj(dir / "gt.obj", inst.gt_mesh);
  }
  std::cout << nlohmann::json{{"scans", scans.observations.size()},
                              {"instances", a.instances},
                              {"vertices", body.num_vertices()}}
                   .dump()
            << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-rendering body fitting toolkit"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "key = value file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  int threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--threads", threads, "worker thread cap, 0 = all cores")
      ->envname("DSR_THREADS")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "random seed");

  BuildPriorArgs bp;
  auto* c_bp = app.add_subcommand("build-prior", "count scan labels per vertex into a prior");
  c_bp->add_option("--scans", bp.scans, "directory of <name>.obj, <name>.camera.json, <name>.png")
      ->required();
  c_bp->add_option("--out", bp.out, "prior container to write")->required();
  c_bp->add_option("--eps-bg", bp.eps_bg, "background probability floor");
  c_bp->add_option("--template", bp.template_path, "template whose part labels clean the prior")
      ->check(CLI::ExistingFile);
  c_bp->add_option("--incompatibility", bp.incompatibility, "part/label exclusion table (JSON)")
      ->check(CLI::ExistingFile);
  c_bp->add_option("--csv", bp.csv, "also export the prior as CSV");

  CleanMaskArgs cm;
  auto* c_cm = app.add_subcommand("clean-mask", "turn a label image into MC and C targets");
  c_cm->add_option("--mask", cm.mask, "label PNG (palette index = class)")->required();
  c_cm->add_option("--keypoints", cm.keypoints, "keypoints JSON (x, y, confidence)")->required();
  c_cm->add_option("--out-dir", cm.out_dir, "output directory")->required();
  c_cm->add_option("--name", cm.name, "sample name, default: mask file stem");
  c_cm->add_option("--crop-offset", cm.crop_offset, "pixels added around the keypoint box")
      ->check(CLI::NonNegativeNumber);
  c_cm->add_option("--min-pixels", cm.min_pixels, "smallest label area kept")
      ->check(CLI::NonNegativeNumber);

  RenderArgs ra;
  auto* c_r = app.add_subcommand("render", "soft-render prior channels or a hard face map to PFM");
  c_r->add_option("--template", ra.template_path, "body template")->required();
  c_r->add_option("--params", ra.params, "body parameters JSON")->required();
  c_r->add_option("--prior", ra.prior, "vertex label prior (mc and c modes)");
  c_r->add_option("--mode", ra.mode, "mc, c or hard")->check(CLI::IsMember({"mc", "c", "hard"}));
  c_r->add_option("--out", ra.out, "PFM to write")->required();
  c_r->add_option("--preview", ra.preview, "PNG preview of the first channel");
  c_r->add_option("--mc-labels", ra.mc_labels, "labels summed in mc mode");
  c_r->add_option("--meta", ra.meta, "take mc labels from a clean-mask meta.json");
  c_r->add_option("--width", ra.width, "image width")->check(CLI::PositiveNumber);
  c_r->add_option("--height", ra.height, "image height")->check(CLI::PositiveNumber);
  c_r->add_option("--sigma", ra.sigma, "edge sharpness")->check(CLI::PositiveNumber);
  c_r->add_option("--gamma", ra.gamma, "depth softmax temperature")->check(CLI::PositiveNumber);

  FitArgs fa;
  auto* c_f = app.add_subcommand("fit", "optimize body parameters against joint and mask targets");
  c_f->add_option("--template", fa.template_path, "body template")->required();
  c_f->add_option("--init", fa.init, "starting parameters JSON")->required();
  c_f->add_option("--joints", fa.joints, "joint targets JSON");
  c_f->add_option("--mc", fa.mc, "minimal-clothing target PNG");
  c_f->add_option("--c", fa.c, "coarse clothing target PNG");
  c_f->add_option("--meta", fa.meta, "clean-mask meta.json naming the valid MC labels");
  c_f->add_option("--mc-labels", fa.mc_labels, "valid MC labels, comma separated");
  c_f->add_option("--prior", fa.prior, "vertex label prior");
  c_f->add_option("--gt", fa.gt, "ground-truth parameters for error metrics");
  c_f->add_option("--out", fa.out, "result JSON")->required();
  c_f->add_option("--trace", fa.trace, "per-iteration JSONL, default <out>.trace.jsonl");
  c_f->add_option("--iters", fa.iters, "iterations")->check(CLI::NonNegativeNumber);
  c_f->add_option("--warmup", fa.warmup, "iterations before the semantic terms switch on "
                                         "(default: iters / 10)");
  c_f->add_option("--lr", fa.lr, "step size")->check(CLI::PositiveNumber);
  c_f->add_option("--optimizer", fa.optimizer, "adam or gd")->check(CLI::IsMember({"adam", "gd"}));
  c_f->add_option("--adam-eps", fa.adam_eps, "Adam denominator epsilon")->check(CLI::PositiveNumber);
  c_f->add_option("--mc-metric", fa.mc_metric, "siou or distm")->check(CLI::IsMember({"siou", "distm"}));
  c_f->add_option("--free", fa.free, "parameter groups to optimize");
  c_f->add_option("--sigma", fa.sigma, "edge sharpness")->check(CLI::PositiveNumber);
  c_f->add_option("--gamma", fa.gamma, "depth softmax temperature")->check(CLI::PositiveNumber);
  c_f->add_option("--width", fa.width, "image width when no mask is given")->check(CLI::PositiveNumber);
  c_f->add_option("--height", fa.height, "image height when no mask is given")->check(CLI::PositiveNumber);
  c_f->add_option("--w-2d", fa.weights.w_2d, "2D joint weight")->check(CLI::NonNegativeNumber);
  c_f->add_option("--w-3d", fa.weights.w_3d, "3D joint weight")->check(CLI::NonNegativeNumber);
  c_f->add_option("--w-theta", fa.weights.w_theta, "parameter weight")->check(CLI::NonNegativeNumber);
  c_f->add_option("--w-mc", fa.weights.w_mc, "minimal-clothing weight")->check(CLI::NonNegativeNumber);
  c_f->add_option("--w-c", fa.weights.w_c, "clothing weight")->check(CLI::NonNegativeNumber);
  c_f->add_flag("--sum-reduction", fa.sum_reduction, "sum the clothing NLL instead of averaging");
  c_f->add_flag("--no-dsr", fa.no_dsr, "never evaluate the semantic terms");
  c_f->add_option("--render-every", fa.render_every, "dump renders every N iterations, 0 = never")
      ->check(CLI::NonNegativeNumber);
  c_f->add_option("--render-dir", fa.render_dir, "render directory, default <out>_renders");

  GradcheckArgs ga;
  auto* c_g = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  c_g->add_option("--size", ga.opt.size, "fixture image side")->check(CLI::Range(4, 64));
  c_g->add_option("--sigma", ga.opt.sigma, "edge sharpness")->check(CLI::PositiveNumber);
  c_g->add_option("--gamma", ga.opt.gamma, "depth softmax temperature")->check(CLI::PositiveNumber);
  c_g->add_flag("--single-precision", ga.opt.single_precision, "analytic pass in float");
  c_g->add_option("--json", ga.json, "also write the report as JSON");

  FixtureArgs xa;
  auto* c_x = app.add_subcommand("make-fixture", "write a synthetic template, scans and fit instances");
  c_x->add_option("--out-dir", xa.out_dir, "output directory")->required();
  c_x->add_option("--subjects", xa.subjects, "scan subjects");
  c_x->add_option("--views", xa.views, "views per subject");
  c_x->add_option("--size", xa.size, "image side");
  c_x->add_option("--instances", xa.instances, "fit instances");
  c_x->add_option("--sides", xa.sides, "vertices per limb ring");
  c_x->add_option("--rings", xa.rings, "rings per limb segment");
  c_x->add_option("--label-noise", xa.label_noise, "fraction of scan pixels relabeled at random");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    set_max_threads(threads);
    if (*c_bp) return cmd_build_prior(bp);
    if (*c_cm) return cmd_clean_mask(cm);
    if (*c_r) return cmd_render(ra);
    if (*c_f) return cmd_fit(fa);
    if (*c_g) return cmd_gradcheck(ga, seed);
    if (*c_x) return cmd_make_fixture(xa, seed);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

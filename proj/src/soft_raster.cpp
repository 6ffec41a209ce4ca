#include "dsr/soft_raster.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "dsr/parallel.h"

namespace dsr {

namespace {

template <typename T>
struct Vec2 {
  T x, y;
};

template <typename T>
T cross(Vec2<T> a, Vec2<T> b) {
  return a.x * b.y - a.y * b.x;
}

template <typename T>
Vec2<T> sub(Vec2<T> a, Vec2<T> b) {
  return {a.x - b.x, a.y - b.y};
}

// log(sigmoid(t)) without overflow.
template <typename T>
T log_sigmoid(T t) {
  return t >= T(0) ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

template <typename T>
T sigmoid(T t) {
  if (t >= T(0)) return T(1) / (T(1) + std::exp(-t));
  const T e = std::exp(t);
  return e / (T(1) + e);
}

// Screen-space geometry shared by every raster mode.
struct Scene {
  Viewport viewport;
  Points2 px;                 // V x 2 pixel coordinates
  Eigen::VectorXd z;          // V depths
  std::vector<int> front;     // front-facing face ids, ascending
  std::vector<std::array<int, 4>> bbox;  // per front face: col0, col1, row0, row1 (inclusive)
  std::vector<std::vector<int>> tiles;   // per tile: slots into `front`, ascending
  int tiles_x = 0;
  int tiles_y = 0;
  int tile = 16;
};

Scene build_scene(const TriangleMesh& mesh, const Camera& camera, const RasterConfig& config,
                  double radius_px) {
  Scene sc;
  sc.viewport = config.viewport();
  sc.px = project(mesh.vertices, camera, sc.viewport);
  sc.z = mesh.vertices.col(2);
  for (Eigen::Index v = 0; v < mesh.vertices.rows(); ++v) {
    if (!std::isfinite(sc.px(v, 0)) || !std::isfinite(sc.px(v, 1)) || !std::isfinite(sc.z[v])) {
      throw NumericalError(fmt::format("vertex {} projects to a non-finite position", v));
    }
  }
  const int nv = static_cast<int>(mesh.vertices.rows());
  for (int f = 0; f < mesh.faces.rows(); ++f) {
    const int i0 = mesh.faces(f, 0), i1 = mesh.faces(f, 1), i2 = mesh.faces(f, 2);
    DSR_CHECK_INPUT(i0 >= 0 && i0 < nv && i1 >= 0 && i1 < nv && i2 >= 0 && i2 < nv,
                    "face {} references a vertex outside [0, {})", f, nv);
    const Vec2<double> p0{sc.px(i0, 0), sc.px(i0, 1)};
    const Vec2<double> p1{sc.px(i1, 0), sc.px(i1, 1)};
    const Vec2<double> p2{sc.px(i2, 0), sc.px(i2, 1)};
    // With y pointing down, a visually counter-clockwise triangle has a
    // negative signed area.
    if (cross(sub(p1, p0), sub(p2, p0)) >= -1e-12) continue;
    const double xmin = std::min({p0.x, p1.x, p2.x}) - radius_px;
    const double xmax = std::max({p0.x, p1.x, p2.x}) + radius_px;
    const double ymin = std::min({p0.y, p1.y, p2.y}) - radius_px;
    const double ymax = std::max({p0.y, p1.y, p2.y}) + radius_px;
    // Pixel c has its centre at c + 0.5.
    const double c0 = std::max(0.0, std::ceil(xmin - 0.5));
    const double c1 = std::min(config.width - 1.0, std::floor(xmax - 0.5));
    const double r0 = std::max(0.0, std::ceil(ymin - 0.5));
    const double r1 = std::min(config.height - 1.0, std::floor(ymax - 0.5));
    if (c0 > c1 || r0 > r1) continue;
    sc.front.push_back(f);
    sc.bbox.push_back({static_cast<int>(c0), static_cast<int>(c1), static_cast<int>(r0),
                       static_cast<int>(r1)});
  }

  sc.tile = std::max(1, config.tile_size);
  sc.tiles_x = (config.width + sc.tile - 1) / sc.tile;
  sc.tiles_y = (config.height + sc.tile - 1) / sc.tile;
  sc.tiles.resize(static_cast<std::size_t>(sc.tiles_x) * sc.tiles_y);
  for (int slot = 0; slot < static_cast<int>(sc.front.size()); ++slot) {
    const auto& b = sc.bbox[slot];
    for (int ty = b[2] / sc.tile; ty <= b[3] / sc.tile; ++ty) {
      for (int tx = b[0] / sc.tile; tx <= b[1] / sc.tile; ++tx) {
        sc.tiles[static_cast<std::size_t>(ty) * sc.tiles_x + tx].push_back(slot);
      }
    }
  }
  return sc;
}

bool covers(const std::array<int, 4>& b, int row, int col) {
  return col >= b[0] && col <= b[1] && row >= b[2] && row <= b[3];
}

// Everything the forward pass knows about one triangle at one pixel.
template <typename T>
struct Fragment {
  int slot;
  int face;
  T bary_raw[3];
  T bary[3];      // clamped and renormalised
  T clamp_sum;
  T log_weight;   // log D + zbar / gamma
  T coverage;     // D
  T signed_dist;  // +1 inside, -1 outside
  T zbar_raw;
  int edge;       // nearest edge (start vertex slot)
  T edge_u;       // closest-point parameter on that edge
};

template <typename T>
struct Kernel {
  const Scene& sc;
  const TriangleMesh& mesh;
  const RowMatrix& attributes;
  const RasterConfig& cfg;
  int channels;
  T inv_sigma;
  T inv_gamma;
  T inv_half2;
  T depth_scale;
  std::vector<T> background;

  Kernel(const Scene& s, const TriangleMesh& m, const RowMatrix& a, const RasterConfig& c)
      : sc(s), mesh(m), attributes(a), cfg(c), channels(static_cast<int>(a.cols())) {
    inv_sigma = T(1.0 / c.sigma);
    inv_gamma = T(1.0 / c.gamma);
    const double half = s.viewport.half_extent();
    inv_half2 = T(1.0 / (half * half));
    depth_scale = T(1.0 / (c.far - c.near));
    background.assign(channels, T(0));
    for (int ch = 0; ch < channels && ch < static_cast<int>(c.background_value.size()); ++ch) {
      background[ch] = T(c.background_value[ch]);
    }
  }

  Vec2<T> vertex(int i) const { return {T(sc.px(i, 0)), T(sc.px(i, 1))}; }

  void fragment(int slot, int row, int col, Fragment<T>& fr) const {
    const int f = sc.front[slot];
    fr.slot = slot;
    fr.face = f;
    const Vec2<T> q{T(col) + T(0.5), T(row) + T(0.5)};
    Vec2<T> p[3];
    for (int k = 0; k < 3; ++k) p[k] = vertex(mesh.faces(f, k));
    const T area2 = cross(sub(p[1], p[0]), sub(p[2], p[0]));
    bool inside = true;
    for (int k = 0; k < 3; ++k) {
      fr.bary_raw[k] = cross(sub(p[(k + 1) % 3], q), sub(p[(k + 2) % 3], q)) / area2;
      inside = inside && fr.bary_raw[k] >= T(0);
    }
    T best = std::numeric_limits<T>::infinity();
    for (int k = 0; k < 3; ++k) {
      const Vec2<T> a = p[k];
      const Vec2<T> e = sub(p[(k + 1) % 3], a);
      const Vec2<T> w = sub(q, a);
      const T len2 = e.x * e.x + e.y * e.y;
      T u = (w.x * e.x + w.y * e.y) / len2;
      u = std::clamp(u, T(0), T(1));
      const T rx = w.x - u * e.x;
      const T ry = w.y - u * e.y;
      const T d2 = rx * rx + ry * ry;
      if (d2 < best) {
        best = d2;
        fr.edge = k;
        fr.edge_u = u;
      }
    }
    fr.signed_dist = inside ? T(1) : T(-1);
    const T t = fr.signed_dist * best * inv_half2 * inv_sigma;
    fr.coverage = sigmoid(t);
    T sum = T(0);
    for (int k = 0; k < 3; ++k) sum += std::max(fr.bary_raw[k], T(0));
    fr.clamp_sum = sum;
    T z = T(0);
    for (int k = 0; k < 3; ++k) {
      fr.bary[k] = std::max(fr.bary_raw[k], T(0)) / sum;
      z += fr.bary[k] * T(sc.z[mesh.faces(f, k)]);
    }
    fr.zbar_raw = (T(cfg.far) - z) * depth_scale;
    const T zbar = std::clamp(fr.zbar_raw, T(0), T(1));
    fr.log_weight = log_sigmoid(t) + zbar * inv_gamma;
  }

  T color(const Fragment<T>& fr, int ch) const {
    T c = T(0);
    for (int k = 0; k < 3; ++k) c += fr.bary[k] * T(attributes(mesh.faces(fr.face, k), ch));
    return c;
  }

  // Gathers fragments for one pixel and returns the log-sum-exp shift.
  T gather(int row, int col, const std::vector<int>& slots, std::vector<Fragment<T>>& frags) const {
    frags.clear();
    T shift = T(0);  // background sits at normalised depth 0
    for (int slot : slots) {
      if (cfg.cutoff && !covers(sc.bbox[slot], row, col)) continue;
      frags.emplace_back();
      fragment(slot, row, col, frags.back());
      shift = std::max(shift, frags.back().log_weight);
    }
    return shift;
  }

  void shade(int row, int col, const std::vector<int>& slots, std::vector<Fragment<T>>& frags,
             std::vector<T>& weights, std::vector<T>& out, T& norm, T& bg_weight) const {
    const T shift = gather(row, col, slots, frags);
    weights.resize(frags.size());
    bg_weight = std::exp(-shift);
    norm = bg_weight;
    out.assign(channels, T(0));
    for (std::size_t i = 0; i < frags.size(); ++i) {
      weights[i] = std::exp(frags[i].log_weight - shift);
      norm += weights[i];
      for (int ch = 0; ch < channels; ++ch) out[ch] += weights[i] * color(frags[i], ch);
    }
    for (int ch = 0; ch < channels; ++ch) out[ch] = (out[ch] + bg_weight * background[ch]) / norm;
  }
};

template <typename T>
ProbImage soft_forward(const TriangleMesh& mesh, const RowMatrix& attributes,
                       const Camera& camera, const RasterConfig& cfg) {
  const double radius = cfg.cutoff ? cfg.cutoff_radius_px() : 1e30;
  const Scene sc = build_scene(mesh, camera, cfg, radius);
  const Kernel<T> kernel(sc, mesh, attributes, cfg);
  const int channels = static_cast<int>(attributes.cols());

  ProbImage img;
  img.image = Image<double>(cfg.width, cfg.height, channels);
  parallel_for(static_cast<int>(sc.tiles.size()), [&](int t) {
    const int ty = t / sc.tiles_x, tx = t % sc.tiles_x;
    std::vector<Fragment<T>> frags;
    std::vector<T> weights, out;
    T norm, bg;
    for (int row = ty * sc.tile; row < std::min(cfg.height, (ty + 1) * sc.tile); ++row) {
      for (int col = tx * sc.tile; col < std::min(cfg.width, (tx + 1) * sc.tile); ++col) {
        kernel.shade(row, col, sc.tiles[t], frags, weights, out, norm, bg);
        for (int ch = 0; ch < channels; ++ch) img.image(row, col, ch) = static_cast<double>(out[ch]);
      }
    }
  });
  for (int ch = 0; ch < channels; ++ch) img.channel_names.push_back(fmt::format("c{}", ch));
  return img;
}

template <typename T>
RasterGradient soft_backward(const TriangleMesh& mesh, const RowMatrix& attributes,
                             const Camera& camera, const RasterConfig& cfg,
                             const Image<double>& cot) {
  const double radius = cfg.cutoff ? cfg.cutoff_radius_px() : 1e30;
  const Scene sc = build_scene(mesh, camera, cfg, radius);
  const Kernel<T> kernel(sc, mesh, attributes, cfg);
  const int channels = static_cast<int>(attributes.cols());
  const int stride = 9 + 3 * channels;  // per slot: 3 x (px, py, z) then 3 x C attributes

  std::vector<std::vector<double>> partial(sc.tiles.size());
  parallel_for(static_cast<int>(sc.tiles.size()), [&](int t) {
    const auto& slots = sc.tiles[t];
    if (slots.empty()) return;
    std::vector<int> local_of(sc.front.size(), -1);
    for (std::size_t i = 0; i < slots.size(); ++i) local_of[slots[i]] = static_cast<int>(i);
    std::vector<double>& acc = partial[t];
    acc.assign(slots.size() * stride, 0.0);

    const int ty = t / sc.tiles_x, tx = t % sc.tiles_x;
    std::vector<Fragment<T>> frags;
    std::vector<T> weights, out, g(channels);
    T norm, bg;
    for (int row = ty * sc.tile; row < std::min(cfg.height, (ty + 1) * sc.tile); ++row) {
      for (int col = tx * sc.tile; col < std::min(cfg.width, (tx + 1) * sc.tile); ++col) {
        bool any = false;
        for (int ch = 0; ch < channels; ++ch) {
          g[ch] = T(cot(row, col, ch));
          any = any || g[ch] != T(0);
        }
        if (!any) continue;
        kernel.shade(row, col, slots, frags, weights, out, norm, bg);
        const Vec2<T> q{T(col) + T(0.5), T(row) + T(0.5)};
        for (std::size_t i = 0; i < frags.size(); ++i) {
          const Fragment<T>& fr = frags[i];
          double* a = acc.data() + static_cast<std::size_t>(local_of[fr.slot]) * stride;
          const T w = weights[i];
          T d_weight = T(0);
          T d_bary[3] = {T(0), T(0), T(0)};
          for (int ch = 0; ch < channels; ++ch) {
            const T col_c = kernel.color(fr, ch);
            d_weight += g[ch] * (col_c - out[ch]) / norm;
            const T d_col = g[ch] * w / norm;
            for (int k = 0; k < 3; ++k) {
              a[9 + k * channels + ch] += static_cast<double>(fr.bary[k] * d_col);
              d_bary[k] += T(attributes(mesh.faces(fr.face, k), ch)) * d_col;
            }
          }
          // w = exp(log sigmoid(t) + zbar / gamma - shift)
          const T d_t = d_weight * w * (T(1) - fr.coverage);
          const T d_zbar = d_weight * w * kernel.inv_gamma;
          if (fr.zbar_raw > T(0) && fr.zbar_raw < T(1)) {
            const T d_z = -d_zbar * kernel.depth_scale;
            for (int k = 0; k < 3; ++k) {
              a[3 * k + 2] += static_cast<double>(fr.bary[k] * d_z);
              d_bary[k] += T(sc.z[mesh.faces(fr.face, k)]) * d_z;
            }
          }

          Vec2<T> p[3];
          for (int k = 0; k < 3; ++k) p[k] = kernel.vertex(mesh.faces(fr.face, k));
          T d_p[3][2] = {{T(0), T(0)}, {T(0), T(0)}, {T(0), T(0)}};
          auto add = [&](int k, Vec2<T> v) {
            d_p[k][0] += v.x;
            d_p[k][1] += v.y;
          };

          // Clamped barycentrics: b = max(w, 0) / sum.
          T dot = T(0);
          for (int k = 0; k < 3; ++k) dot += d_bary[k] * fr.bary[k];
          T d_raw[3];
          for (int k = 0; k < 3; ++k) {
            d_raw[k] = fr.bary_raw[k] > T(0) ? (d_bary[k] - dot) / fr.clamp_sum : T(0);
          }
          const T area2 = cross(sub(p[1], p[0]), sub(p[2], p[0]));
          T d_area = T(0);
          for (int k = 0; k < 3; ++k) {
            if (d_raw[k] == T(0)) continue;
            const T d_num = d_raw[k] / area2;
            d_area -= d_raw[k] * fr.bary_raw[k] / area2;
            const Vec2<T> u = sub(p[(k + 1) % 3], q);
            const Vec2<T> v = sub(p[(k + 2) % 3], q);
            add((k + 1) % 3, {v.y * d_num, -v.x * d_num});
            add((k + 2) % 3, {-u.y * d_num, u.x * d_num});
          }
          {
            const Vec2<T> u = sub(p[1], p[0]);
            const Vec2<T> v = sub(p[2], p[0]);
            add(1, {v.y * d_area, -v.x * d_area});
            add(2, {-u.y * d_area, u.x * d_area});
            add(0, {(u.y - v.y) * d_area, (v.x - u.x) * d_area});
          }

          // t = sign * d^2 / (half^2 sigma); closest point on edge (a, b).
          const T d_d2 = d_t * fr.signed_dist * kernel.inv_half2 * kernel.inv_sigma;
          if (d_d2 != T(0)) {
            const int ka = fr.edge, kb = (fr.edge + 1) % 3;
            const Vec2<T> e = sub(p[kb], p[ka]);
            const Vec2<T> r{q.x - p[ka].x - fr.edge_u * e.x, q.y - p[ka].y - fr.edge_u * e.y};
            const T sa = T(-2) * (T(1) - fr.edge_u) * d_d2;
            const T sb = T(-2) * fr.edge_u * d_d2;
            add(ka, {sa * r.x, sa * r.y});
            add(kb, {sb * r.x, sb * r.y});
          }
          for (int k = 0; k < 3; ++k) {
            a[3 * k] += static_cast<double>(d_p[k][0]);
            a[3 * k + 1] += static_cast<double>(d_p[k][1]);
          }
        }
      }
    }
  });

  // Deterministic merge: tiles in order, slots in face order.
  const int nv = static_cast<int>(mesh.vertices.rows());
  Points2 d_px = Points2::Zero(nv, 2);
  RasterGradient grad;
  grad.d_vertices = Vertices::Zero(nv, 3);
  grad.d_attributes = RowMatrix::Zero(nv, channels);
  for (std::size_t t = 0; t < sc.tiles.size(); ++t) {
    const auto& slots = sc.tiles[t];
    const auto& acc = partial[t];
    if (acc.empty()) continue;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const double* a = acc.data() + i * stride;
      const int f = sc.front[slots[i]];
      for (int k = 0; k < 3; ++k) {
        const int v = mesh.faces(f, k);
        d_px(v, 0) += a[3 * k];
        d_px(v, 1) += a[3 * k + 1];
        grad.d_vertices(v, 2) += a[3 * k + 2];
        for (int ch = 0; ch < channels; ++ch) grad.d_attributes(v, ch) += a[9 + k * channels + ch];
      }
    }
  }
  const ProjectionGradient pg = project_vjp(mesh.vertices, camera, sc.viewport, d_px);
  grad.d_vertices.col(0) += pg.d_points.col(0);
  grad.d_vertices.col(1) += pg.d_points.col(1);
  grad.d_camera = pg.d_camera;
  return grad;
}

void check_inputs(const TriangleMesh& mesh, const RowMatrix& attributes, const RasterConfig& cfg) {
  cfg.validate();
  DSR_CHECK_INPUT(attributes.rows() == mesh.vertices.rows(),
                  "attributes have {} rows, mesh has {} vertices", attributes.rows(),
                  mesh.vertices.rows());
  DSR_CHECK_INPUT(attributes.cols() >= 1, "attributes need at least one channel");
}

RowMatrix masked_rows(const RowMatrix& rows, const std::vector<std::uint8_t>& visibility) {
  DSR_CHECK_INPUT(visibility.size() == static_cast<std::size_t>(rows.rows()),
                  "visibility has {} entries, prior has {} rows", visibility.size(), rows.rows());
  RowMatrix out = rows;
  for (Eigen::Index v = 0; v < rows.rows(); ++v) {
    if (!visibility[v]) out.row(v).setZero();
  }
  return out;
}

}  // namespace

void RasterConfig::validate() const {
  DSR_CHECK_INPUT(width >= 1 && height >= 1, "raster size must be positive, got {}x{}", width,
                  height);
  DSR_CHECK_INPUT(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive, got {}", sigma);
  DSR_CHECK_INPUT(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive, got {}", gamma);
  DSR_CHECK_INPUT(near < far, "near ({}) must be less than far ({})", near, far);
  DSR_CHECK_INPUT(tile_size >= 1, "tile size must be positive, got {}", tile_size);
}

double RasterConfig::cutoff_radius_px() const {
  // exp(-d^2 / sigma + 1 / gamma) <= exp(-40) bounds every skipped weight
  // relative to the background term.
  const double r2 = sigma * (1.0 / gamma + 40.0);
  return std::sqrt(r2) * viewport().half_extent();
}

Image<double> ProbImage::channel(int c) const {
  Image<double> out(image.width, image.height, 1);
  for (int r = 0; r < image.height; ++r) {
    for (int col = 0; col < image.width; ++col) out(r, col) = image(r, col, c);
  }
  return out;
}

ProbImage rasterize_soft(const TriangleMesh& mesh, const RowMatrix& attributes,
                         const Camera& camera, const RasterConfig& config) {
  check_inputs(mesh, attributes, config);
  return config.single_precision ? soft_forward<float>(mesh, attributes, camera, config)
                                 : soft_forward<double>(mesh, attributes, camera, config);
}

RasterGradient rasterize_soft_vjp(const TriangleMesh& mesh, const RowMatrix& attributes,
                                  const Camera& camera, const RasterConfig& config,
                                  const Image<double>& cotangent) {
  check_inputs(mesh, attributes, config);
  DSR_CHECK_INPUT(cotangent.width == config.width && cotangent.height == config.height &&
                      cotangent.channels == attributes.cols(),
                  "cotangent is {}x{}x{}, expected {}x{}x{}", cotangent.height, cotangent.width,
                  cotangent.channels, config.height, config.width, attributes.cols());
  return config.single_precision
             ? soft_backward<float>(mesh, attributes, camera, config, cotangent)
             : soft_backward<double>(mesh, attributes, camera, config, cotangent);
}

HardRaster rasterize_hard(const TriangleMesh& mesh, const Camera& camera,
                          const RasterConfig& config) {
  config.validate();
  const Scene sc = build_scene(mesh, camera, config, 0.0);
  HardRaster out;
  out.face_index = Image<int>(config.width, config.height, 1, kNoFace);
  out.depth = Image<double>(config.width, config.height, 1,
                            std::numeric_limits<double>::infinity());
  parallel_for(static_cast<int>(sc.tiles.size()), [&](int t) {
    const int ty = t / sc.tiles_x, tx = t % sc.tiles_x;
    for (int row = ty * sc.tile; row < std::min(config.height, (ty + 1) * sc.tile); ++row) {
      for (int col = tx * sc.tile; col < std::min(config.width, (tx + 1) * sc.tile); ++col) {
        const Vec2<double> q{col + 0.5, row + 0.5};
        int best_face = kNoFace;
        double best_depth = std::numeric_limits<double>::infinity();
        for (int slot : sc.tiles[t]) {
          if (!covers(sc.bbox[slot], row, col)) continue;
          const int f = sc.front[slot];
          Vec2<double> p[3];
          for (int k = 0; k < 3; ++k) p[k] = {sc.px(mesh.faces(f, k), 0), sc.px(mesh.faces(f, k), 1)};
          const double area2 = cross(sub(p[1], p[0]), sub(p[2], p[0]));
          double depth = 0.0;
          bool inside = true;
          for (int k = 0; k < 3 && inside; ++k) {
            const double b = cross(sub(p[(k + 1) % 3], q), sub(p[(k + 2) % 3], q)) / area2;
            inside = b >= 0.0;
            depth += b * sc.z[mesh.faces(f, k)];
          }
          if (inside && depth < best_depth) {
            best_depth = depth;
            best_face = f;
          }
        }
        out.face_index(row, col) = best_face;
        out.depth(row, col) = best_depth;
      }
    }
  });
  return out;
}

std::vector<std::uint8_t> visible_vertices(const HardRaster& raster, const TriangleMesh& mesh) {
  std::vector<std::uint8_t> vis(mesh.vertices.rows(), 0);
  for (int f : raster.face_index.data) {
    if (f == kNoFace) continue;
    for (int k = 0; k < 3; ++k) vis[mesh.faces(f, k)] = 1;
  }
  return vis;
}

BinaryMask silhouette(const HardRaster& raster) {
  BinaryMask out(raster.face_index.width, raster.face_index.height, 1, 0);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = raster.face_index.data[i] != kNoFace;
  return out;
}

ProbImage render_semantic_channels(const TriangleMesh& mesh, const RowMatrix& prior_rows,
                                   const std::vector<std::uint8_t>& visibility,
                                   const Camera& camera, const RasterConfig& config) {
  return rasterize_soft(mesh, masked_rows(prior_rows, visibility), camera, config);
}

RasterGradient render_semantic_channels_vjp(const TriangleMesh& mesh,
                                            const RowMatrix& prior_rows,
                                            const std::vector<std::uint8_t>& visibility,
                                            const Camera& camera, const RasterConfig& config,
                                            const Image<double>& cotangent) {
  RasterGradient g =
      rasterize_soft_vjp(mesh, masked_rows(prior_rows, visibility), camera, config, cotangent);
  for (Eigen::Index v = 0; v < prior_rows.rows(); ++v) {
    if (!visibility[v]) g.d_attributes.row(v).setZero();
  }
  return g;
}

}  // namespace dsr

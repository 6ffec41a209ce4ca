#pragma once

#include <cstdint>
#include <vector>

#include "dsr/body_model.h"
#include "dsr/common.h"

namespace dsr {

inline constexpr int kNoFace = -1;

struct RasterConfig {
  int width = 64;
  int height = 64;
  // Edge sharpness, in squared normalized image units.
  double sigma = 1e-5;
  // Depth-softmax temperature.
  double gamma = 1e-1;
  // Per-channel fill; empty means zeros.
  std::vector<double> background_value;
  // Depth range mapped onto normalized depth (far - z) / (far - near).
  double near = -1.0;
  double far = 10.0;
  // Skip triangles whose expanded bounding box misses a pixel. The radius is
  // chosen so skipped weights are below 1e-17 of the pixel total.
  bool cutoff = true;
  // Run the per-pixel math in float.
  bool single_precision = false;
  int tile_size = 16;

  void validate() const;
  Viewport viewport() const { return {width, height}; }
  // Cutoff radius in pixels.
  double cutoff_radius_px() const;
};

ProbImage rasterize_soft(const TriangleMesh& mesh, const RowMatrix& attributes,
                         const Camera& camera, const RasterConfig& config);

struct RasterGradient {
  Vertices d_vertices;
  RowMatrix d_attributes;
  Eigen::Vector3d d_camera = Eigen::Vector3d::Zero();  // (scale, tx, ty)
};

RasterGradient rasterize_soft_vjp(const TriangleMesh& mesh, const RowMatrix& attributes,
                                  const Camera& camera, const RasterConfig& config,
                                  const Image<double>& cotangent);

struct HardRaster {
  Image<int> face_index;   // kNoFace where nothing is covered
  Image<double> depth;     // +inf where nothing is covered
};

// Z-buffer over front-facing triangles; the lowest face index wins ties.
HardRaster rasterize_hard(const TriangleMesh& mesh, const Camera& camera,
                          const RasterConfig& config);

// A vertex is visible when any face using it owns at least one pixel.
std::vector<std::uint8_t> visible_vertices(const HardRaster& raster, const TriangleMesh& mesh);

BinaryMask silhouette(const HardRaster& raster);

// Zeroes attribute rows of invisible vertices and soft-renders the rest.
ProbImage render_semantic_channels(const TriangleMesh& mesh, const RowMatrix& prior_rows,
                                   const std::vector<std::uint8_t>& visibility,
                                   const Camera& camera, const RasterConfig& config);

RasterGradient render_semantic_channels_vjp(const TriangleMesh& mesh,
                                            const RowMatrix& prior_rows,
                                            const std::vector<std::uint8_t>& visibility,
                                            const Camera& camera, const RasterConfig& config,
                                            const Image<double>& cotangent);

}  // namespace dsr

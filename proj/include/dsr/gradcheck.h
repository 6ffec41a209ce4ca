#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dsr {

struct GradcheckOptions {
  int size = 16;  // image side for raster and chain groups
  double sigma = 1e-4;
  double gamma = 1e-1;
  bool single_precision = false;
  std::uint64_t seed = 0;
};

struct GradcheckGroup {
  std::string name;
  int checked = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_error < tolerance; }
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  double step = 0.0;
  bool single_precision = false;

  bool passed() const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Central finite differences against every analytic gradient: the soft
// rasterizer (vertices, attributes, camera), each loss on 8x8 inputs, and the
// parameters -> mesh -> render -> loss chain on a 240-vertex humanoid.
// Per-component error is |a - n| / max(|a|, |n|, 1e-6 * group max), and a
// group passes below 1e-4. In single precision the float gradients are
// compared against differences of the double forward pass, with tolerance 1e-2.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace dsr

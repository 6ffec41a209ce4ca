#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

namespace dsr {

// Malformed or inconsistent input: bad dimensions, unreadable files, invalid
// configuration. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or divergence during computation. Maps to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DSR_CHECK_INPUT(cond, ...)                          \
  do {                                                      \
    if (!(cond)) {                                          \
      throw ::dsr::InputError(::fmt::format(__VA_ARGS__));  \
    }                                                       \
  } while (0)

using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TriangleMesh {
  Vertices vertices;
  Faces faces;
};

// Dense row-major H x W x C image.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t index(int row, int col, int ch = 0) const {
    return (static_cast<std::size_t>(row) * width + col) * channels + ch;
  }
  T& operator()(int row, int col, int ch = 0) { return data[index(row, col, ch)]; }
  const T& operator()(int row, int col, int ch = 0) const { return data[index(row, col, ch)]; }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(int w, int h) const { return width == w && height == h; }
};

using BinaryMask = Image<std::uint8_t>;

// Real-valued H x W x C image with named channels.
struct ProbImage {
  Image<double> image;
  std::vector<std::string> channel_names;

  // Single channel extracted as its own image.
  Image<double> channel(int c) const;
};

}  // namespace dsr

namespace dsr {

// Warnings go to stderr unless silenced (tests silence them).
void log_warning(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace dsr

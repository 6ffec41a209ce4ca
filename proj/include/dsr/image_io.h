#pragma once

#include <filesystem>

#include "dsr/common.h"

namespace dsr {

// 8-bit PNG whose pixel values are class indices. Written as a palette image;
// palette and 8-bit grayscale images are accepted on read.
void write_label_png(const std::filesystem::path& path, const Image<std::uint8_t>& labels);
Image<std::uint8_t> read_label_png(const std::filesystem::path& path);

// Grayscale preview of a real-valued channel, clamped to [0, 1].
void write_preview_png(const std::filesystem::path& path, const Image<double>& channel);

// Portable float map, little-endian. One channel writes "Pf", three write
// "PF"; any other channel count is written as a "Pf" image with the channels
// stacked top to bottom (height H * C).
void write_pfm(const std::filesystem::path& path, const Image<double>& image);
Image<double> read_pfm(const std::filesystem::path& path);

}  // namespace dsr

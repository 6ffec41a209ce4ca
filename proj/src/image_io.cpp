#include "dsr/image_io.h"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace dsr {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  DSR_CHECK_INPUT(f != nullptr, "cannot open '{}'", path.string());
  return f;
}

// Deterministic palette: a few distinct colors for the first labels, gray
// ramp for the rest.
std::array<png_color, 256> label_palette() {
  static constexpr unsigned char base[20][3] = {
      {0, 0, 0},       {128, 0, 0},   {255, 0, 0},     {0, 85, 0},     {170, 0, 51},
      {255, 85, 0},    {0, 0, 85},    {0, 119, 221},   {85, 85, 0},    {0, 85, 85},
      {85, 51, 0},     {52, 86, 128}, {0, 128, 0},     {0, 0, 255},    {51, 170, 221},
      {0, 255, 255},   {85, 255, 170}, {170, 255, 85}, {255, 255, 0},  {255, 170, 0}};
  std::array<png_color, 256> pal{};
  for (int i = 0; i < 256; ++i) {
    if (i < 20) {
      pal[i] = {base[i][0], base[i][1], base[i][2]};
    } else {
      const auto g = static_cast<png_byte>(i);
      pal[i] = {g, g, g};
    }
  }
  return pal;
}

void write_png(const std::filesystem::path& path, const Image<std::uint8_t>& img, bool palette) {
  DSR_CHECK_INPUT(img.channels == 1 && img.width > 0 && img.height > 0,
                  "PNG export needs a non-empty single-channel image");
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError(fmt::format("failed to write PNG '{}'", path.string()));
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               palette ? PNG_COLOR_TYPE_PALETTE : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  const auto pal = label_palette();
  if (palette) png_set_PLTE(png, info, pal.data(), 256);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r) {
    png_write_row(png, img.data.data() + static_cast<std::size_t>(r) * img.width);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_label_png(const std::filesystem::path& path, const Image<std::uint8_t>& labels) {
  write_png(path, labels, true);
}

Image<std::uint8_t> read_label_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  unsigned char sig[8];
  DSR_CHECK_INPUT(std::fread(sig, 1, 8, f.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0,
                  "'{}' is not a PNG file", path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  Image<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError(fmt::format("corrupt PNG '{}'", path.string()));
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  const bool ok = (color == PNG_COLOR_TYPE_PALETTE || color == PNG_COLOR_TYPE_GRAY) && depth <= 8;
  if (!ok) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError(fmt::format("'{}' must be an 8-bit palette or grayscale PNG",
                                 path.string()));
  }
  if (depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  out = Image<std::uint8_t>(w, h);
  for (int r = 0; r < h; ++r) {
    png_read_row(png, out.data.data() + static_cast<std::size_t>(r) * w, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_preview_png(const std::filesystem::path& path, const Image<double>& channel) {
  DSR_CHECK_INPUT(channel.channels == 1, "preview needs a single channel");
  Image<std::uint8_t> img(channel.width, channel.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(channel.data[i], 0.0, 1.0)));
  }
  write_png(path, img, false);
}

void write_pfm(const std::filesystem::path& path, const Image<double>& image) {
  const int c = image.channels;
  const bool color = c == 3;
  const int rows = color || c == 1 ? image.height : image.height * c;
  std::ofstream out(path, std::ios::binary);
  DSR_CHECK_INPUT(out.good(), "cannot open '{}' for writing", path.string());
  out << (color ? "PF" : "Pf") << '\n' << image.width << ' ' << rows << '\n' << "-1.0\n";
  const int per_pixel = color ? 3 : 1;
  std::vector<float> row(static_cast<std::size_t>(image.width) * per_pixel);
  // Rows are stored bottom to top.
  for (int rr = rows - 1; rr >= 0; --rr) {
    const int ch = color || c == 1 ? 0 : rr / image.height;
    const int r = color || c == 1 ? rr : rr % image.height;
    for (int x = 0; x < image.width; ++x) {
      for (int k = 0; k < per_pixel; ++k) {
        row[static_cast<std::size_t>(x) * per_pixel + k] =
            static_cast<float>(image(r, x, color ? k : ch));
      }
    }
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& v : row) v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(v)));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  DSR_CHECK_INPUT(out.good(), "failed writing '{}'", path.string());
}

Image<double> read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  DSR_CHECK_INPUT(in.good(), "cannot open '{}'", path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  DSR_CHECK_INPUT((magic == "Pf" || magic == "PF") && w > 0 && h > 0 && scale != 0.0,
                  "'{}' has a malformed PFM header", path.string());
  const int c = magic == "PF" ? 3 : 1;
  Image<double> img(w, h, c);
  std::vector<float> row(static_cast<std::size_t>(w) * c);
  const bool swap = (scale > 0) != (std::endian::native == std::endian::big);
  for (int r = h - 1; r >= 0; --r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    DSR_CHECK_INPUT(in.good(), "'{}' is truncated", path.string());
    for (std::size_t i = 0; i < row.size(); ++i) {
      float v = row[i];
      if (swap) v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(v)));
      img.data[static_cast<std::size_t>(r) * w * c + i] = v;
    }
  }
  return img;
}

}  // namespace dsr

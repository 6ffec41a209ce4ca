#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dsr {

// Self-describing binary container: "DSRT" magic, u32 version, u64 header
// length, a JSON header listing every array (name, dtype, shape, offset,
// nbytes), then the little-endian array payload.
class Container {
 public:
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json meta = nlohmann::json::object();

  void put_f64(const std::string& name, std::vector<std::int64_t> shape,
               std::span<const double> values);
  void put_i32(const std::string& name, std::vector<std::int64_t> shape,
               std::span<const std::int32_t> values);

  bool has(const std::string& name) const;
  std::vector<std::int64_t> shape(const std::string& name) const;
  std::vector<double> get_f64(const std::string& name) const;
  std::vector<std::int32_t> get_i32(const std::string& name) const;

  void write(const std::filesystem::path& path) const;
  static Container read(const std::filesystem::path& path);

 private:
  struct Array {
    std::string name;
    std::string dtype;
    std::vector<std::int64_t> shape;
    std::vector<unsigned char> bytes;
  };
  const Array& find(const std::string& name, const std::string& dtype) const;
  std::vector<Array> arrays_;
};

}  // namespace dsr

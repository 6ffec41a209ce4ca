#include "dsr/container.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "dsr/common.h"

namespace dsr {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'S', 'R', 'T'};

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

template <typename T>
std::vector<unsigned char> to_bytes(std::span<const T> values) {
  std::vector<unsigned char> out(values.size_bytes());
  if (!out.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

}  // namespace

void Container::put_f64(const std::string& name, std::vector<std::int64_t> shape,
                        std::span<const double> values) {
  DSR_CHECK_INPUT(element_count(shape) == static_cast<std::int64_t>(values.size()),
                  "array '{}' shape does not match its {} values", name, values.size());
  arrays_.push_back({name, "f64", std::move(shape), to_bytes(values)});
}

void Container::put_i32(const std::string& name, std::vector<std::int64_t> shape,
                        std::span<const std::int32_t> values) {
  DSR_CHECK_INPUT(element_count(shape) == static_cast<std::int64_t>(values.size()),
                  "array '{}' shape does not match its {} values", name, values.size());
  arrays_.push_back({name, "i32", std::move(shape), to_bytes(values)});
}

bool Container::has(const std::string& name) const {
  for (const auto& a : arrays_) {
    if (a.name == name) return true;
  }
  return false;
}

const Container::Array& Container::find(const std::string& name, const std::string& dtype) const {
  for (const auto& a : arrays_) {
    if (a.name != name) continue;
    DSR_CHECK_INPUT(a.dtype == dtype, "array '{}' has dtype {}, expected {}", name, a.dtype, dtype);
    return a;
  }
  throw InputError(fmt::format("container has no array named '{}'", name));
}

std::vector<std::int64_t> Container::shape(const std::string& name) const {
  for (const auto& a : arrays_) {
    if (a.name == name) return a.shape;
  }
  throw InputError(fmt::format("container has no array named '{}'", name));
}

std::vector<double> Container::get_f64(const std::string& name) const {
  const Array& a = find(name, "f64");
  std::vector<double> out(a.bytes.size() / sizeof(double));
  if (!out.empty()) std::memcpy(out.data(), a.bytes.data(), a.bytes.size());
  return out;
}

std::vector<std::int32_t> Container::get_i32(const std::string& name) const {
  const Array& a = find(name, "i32");
  std::vector<std::int32_t> out(a.bytes.size() / sizeof(std::int32_t));
  if (!out.empty()) std::memcpy(out.data(), a.bytes.data(), a.bytes.size());
  return out;
}

void Container::write(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["meta"] = meta;
  header["arrays"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& a : arrays_) {
    header["arrays"].push_back({{"name", a.name},
                                {"dtype", a.dtype},
                                {"shape", a.shape},
                                {"offset", offset},
                                {"nbytes", a.bytes.size()}});
    offset += a.bytes.size();
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  DSR_CHECK_INPUT(out.good(), "cannot open '{}' for writing", path.string());
  const std::uint32_t version = kVersion;
  const std::uint64_t length = text.size();
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : arrays_) {
    out.write(reinterpret_cast<const char*>(a.bytes.data()),
              static_cast<std::streamsize>(a.bytes.size()));
  }
  DSR_CHECK_INPUT(out.good(), "failed writing '{}'", path.string());
}

Container Container::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  DSR_CHECK_INPUT(in.good(), "cannot open '{}'", path.string());
  char magic[4] = {};
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  DSR_CHECK_INPUT(in.good() && std::memcmp(magic, kMagic, 4) == 0,
                  "'{}' is not a DSRT container", path.string());
  DSR_CHECK_INPUT(version == kVersion, "'{}' has unsupported container version {}",
                  path.string(), version);
  DSR_CHECK_INPUT(length < (1ull << 32), "'{}' has a corrupt header length", path.string());
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  DSR_CHECK_INPUT(in.good(), "'{}' is truncated", path.string());

  Container c;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("'{}' has a malformed header: {}", path.string(), e.what()));
  }
  c.meta = header.value("meta", nlohmann::json::object());
  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
  for (const auto& entry : header.at("arrays")) {
    Array a;
    a.name = entry.at("name").get<std::string>();
    a.dtype = entry.at("dtype").get<std::string>();
    a.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
    DSR_CHECK_INPUT(offset + nbytes <= payload.size(), "array '{}' in '{}' is truncated", a.name,
                    path.string());
    const std::size_t elem = a.dtype == "f64" ? 8 : 4;
    DSR_CHECK_INPUT(nbytes == static_cast<std::uint64_t>(element_count(a.shape)) * elem,
                    "array '{}' in '{}' has inconsistent size", a.name, path.string());
    a.bytes.assign(payload.begin() + static_cast<std::ptrdiff_t>(offset),
                   payload.begin() + static_cast<std::ptrdiff_t>(offset + nbytes));
    c.arrays_.push_back(std::move(a));
  }
  return c;
}

}  // namespace dsr

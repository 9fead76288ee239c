#include "okd/nn/weights_io.hpp"

#include <fstream>

#include "../common/binary_io.hpp"
#include "okd/errors.hpp"

namespace okd::nn {

namespace {
constexpr char kMagic[5] = "OKW1";
constexpr std::uint16_t kVersion = 1;
}  // namespace

void write_weights(const std::filesystem::path& path, const std::vector<ParamRef>& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  using detail::write_le;
  detail::write_magic(os, kMagic);
  write_le<std::uint16_t>(os, kVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    write_le<std::uint16_t>(os, static_cast<std::uint16_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_le<std::uint8_t>(os, static_cast<std::uint8_t>(p.value->rank()));
    for (size_t d : p.value->dims()) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (double v : p.value->values()) write_le<double>(os, v);
  }
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

void read_weights(const std::filesystem::path& path, const std::vector<ParamRef>& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  using detail::read_le;
  detail::expect_magic(is, kMagic, path.string());
  const auto version = read_le<std::uint16_t>(is);
  if (version != kVersion) throw FormatError("unsupported OKW1 version " + std::to_string(version));
  const auto count = read_le<std::uint32_t>(is);
  if (count != params.size()) {
    throw FormatError(path.string() + ": holds " + std::to_string(count) + " tensors, model expects " +
                      std::to_string(params.size()));
  }
  // Read everything before touching the model so a bad file leaves it intact.
  std::vector<Tensor> loaded;
  loaded.reserve(count);
  for (const auto& p : params) {
    const auto len = read_le<std::uint16_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (!is) throw FormatError("unexpected end of file");
    if (name != p.name) throw FormatError("expected tensor '" + p.name + "', found '" + name + "'");
    const auto rank = read_le<std::uint8_t>(is);
    Dims dims(rank);
    for (auto& d : dims) d = read_le<std::uint32_t>(is);
    if (dims != p.value->dims()) {
      throw ShapeError("tensor '" + name + "': expected dims " + dims_to_string(p.value->dims()) +
                       ", file has " + dims_to_string(dims));
    }
    Tensor t(dims);
    for (auto& v : t.values()) v = read_le<double>(is);
    loaded.push_back(std::move(t));
  }
  for (size_t k = 0; k < params.size(); ++k) *params[k].value = std::move(loaded[k]);
}

}  // namespace okd::nn

#include "simdec/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "simdec/errors.hpp"

namespace simdec::nn {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'C', 'K', 'P', 'T', '0', '1'};

static_assert(sizeof(double) == 8);

void write_u64_le(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, 8);
}

std::uint64_t read_u64_le(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

nlohmann::json read_header(std::istream& is, const std::filesystem::path& path) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  const std::uint64_t len = read_u64_le(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("checkpoint: truncated header in " + path.string());
  auto header = nlohmann::json::parse(text);
  if (header.value("format_version", 0) != kCheckpointFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format_version in " + path.string());
  }
  return header;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterList& params, const nlohmann::json& hyper) {
  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["hyper"] = hyper;
  header["params"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const Parameter* p : params) {
    header["params"].push_back({{"name", p->name}, {"shape", p->value.shape()}, {"offset", offset}});
    offset += p->value.size();
  }
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  os.write(kMagic, 8);
  write_u64_le(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter* p : params) {
    for (double v : p->value.values()) write_u64_le(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return read_header(is, path);
}

nlohmann::json load_checkpoint(const std::filesystem::path& path, const ParameterList& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  const auto header = read_header(is, path);
  const auto& entries = header.at("params");
  if (entries.size() != params.size()) {
    throw ShapeError("checkpoint: " + path.string() + " holds " + std::to_string(entries.size()) +
                     " parameters, model expects " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& e = entries[k];
    Parameter& p = *params[k];
    if (e.at("name").get<std::string>() != p.name ||
        e.at("shape").get<std::vector<std::size_t>>() != p.value.shape()) {
      throw ShapeError("checkpoint: parameter " + std::to_string(k) + " is '" + e.at("name").get<std::string>() +
                       "', model expects '" + p.name + "' " + p.value.shape_string());
    }
  }
  for (Parameter* p : params) {
    for (double& v : p->value.values()) v = std::bit_cast<double>(read_u64_le(is));
  }
  return header.at("hyper");
}

}  // namespace simdec::nn

#include "tssr/checkpoint.hpp"

#include "tssr/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace tssr {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'S', 'R', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  require(in.good(), ErrorKind::Io, "truncated checkpoint");
  return v;
}

}  // namespace

void Checkpoint::store(const ParameterSet& params) {
  for (const auto& p : params) {
    require(!contains(p.name), ErrorKind::InvalidArgument, "checkpoint already holds tensor " + p.name);
    tensors.push_back(NamedTensor{p.name, p.value});
  }
}

bool Checkpoint::contains(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

void Checkpoint::load_into(ParameterSet& params) const {
  for (auto& p : params) {
    const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const NamedTensor& t) { return t.name == p.name; });
    require(it != tensors.end(), ErrorKind::Data, "checkpoint lacks tensor " + p.name);
    require(it->value.rows() == p.value.rows() && it->value.cols() == p.value.cols(), ErrorKind::Shape,
            "checkpoint tensor " + p.name + " has the wrong shape");
    p.value = it->value;
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["config"] = ckpt.config;
  header["metadata"] = ckpt.metadata;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    header["tensors"].push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(t.value.size()) * sizeof(double);
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_raw(out, kCheckpointFormatVersion);
  write_raw(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : ckpt.tensors)
    out.write(reinterpret_cast<const char*>(t.value.data()), static_cast<std::streamsize>(t.value.size() * sizeof(double)));
  require(out.good(), ErrorKind::Io, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  require(in.good() && std::memcmp(magic, kMagic, sizeof kMagic) == 0, ErrorKind::Data,
          path.string() + " is not a checkpoint file");
  const auto version = read_raw<std::uint32_t>(in);
  require(version == kCheckpointFormatVersion, ErrorKind::Data,
          "unsupported checkpoint format version " + std::to_string(version));
  const auto header_len = read_raw<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  require(in.good(), ErrorKind::Io, "truncated checkpoint header");
  const auto header = nlohmann::json::parse(text);

  Checkpoint ckpt;
  ckpt.config = header.at("config");
  ckpt.metadata = header.at("metadata");
  const auto data_start = in.tellg();
  for (const auto& t : header.at("tensors")) {
    Matrix m(t.at("rows").get<Index>(), t.at("cols").get<Index>());
    in.seekg(data_start + static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    require(in.good(), ErrorKind::Io, "truncated checkpoint data for " + t.at("name").get<std::string>());
    ckpt.tensors.push_back(NamedTensor{t.at("name").get<std::string>(), std::move(m)});
  }
  return ckpt;
}

}  // namespace tssr

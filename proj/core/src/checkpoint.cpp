#include "gzhybrid/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "gzhybrid/errors.hpp"

namespace gzhybrid {

namespace {

void put_u32le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

void put_f32le(std::ostream& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32le(out, bits);
}

float get_f32le(const unsigned char* b) {
  std::uint32_t bits = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
                       (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::vector<std::size_t> parse_shape(const std::string& text) {
  std::vector<std::size_t> shape;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find('x', pos);
    if (next == std::string::npos) next = text.size();
    shape.push_back(std::stoull(text.substr(pos, next - pos)));
    pos = next + 1;
  }
  return shape;
}

}  // namespace

NamedTensors flatten_groups(
    const std::vector<std::pair<std::string, const ParameterSet<float>*>>& groups) {
  NamedTensors out;
  for (const auto& [prefix, params] : groups)
    for (const auto& name : params->names())
      out.add(prefix + "/" + name, params->at(name));
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ostringstream manifest;
  std::uint64_t offset = 0;
  for (const auto& name : tensors.names) {
    const auto& t = tensors.tensors.at(name);
    manifest << name << ' ' << shape_string(t.shape) << ' ' << offset << '\n';
    offset += std::uint64_t(t.size()) * 4;
  }
  const std::string mtext = manifest.str();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  out.write(kCheckpointMagic, 6);
  put_u32le(out, kCheckpointVersion);
  put_u64le(out, mtext.size());
  out.write(mtext.data(), std::streamsize(mtext.size()));
  for (const auto& name : tensors.names)
    for (float v : tensors.tensors.at(name).data) put_f32le(out, v);
  if (!out) throw CheckpointError("checkpoint write failed: " + path.string());
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kCheckpointMagic, 6) != 0)
    throw CheckpointError("bad checkpoint magic in " + path.string());
  const std::uint32_t version = get_u32le(in);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t mlen = get_u64le(in);
  std::string mtext(mlen, '\0');
  in.read(mtext.data(), std::streamsize(mlen));
  if (!in) throw CheckpointError("truncated checkpoint manifest: " + path.string());

  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::uint64_t offset;
  };
  std::vector<Entry> entries;
  std::istringstream lines(mtext);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Entry e;
    std::string shape_text;
    if (!(ls >> e.name >> shape_text >> e.offset))
      throw CheckpointError("malformed manifest line: " + line);
    e.shape = parse_shape(shape_text);
    entries.push_back(std::move(e));
  }

  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
  NamedTensors out;
  for (const auto& e : entries) {
    Tensor<float> t(e.shape);
    const std::uint64_t bytes = std::uint64_t(t.size()) * 4;
    if (e.offset + bytes > payload.size())
      throw CheckpointError("payload too short for tensor " + e.name);
    for (std::size_t i = 0; i < t.size(); ++i)
      t.data[i] = get_f32le(payload.data() + e.offset + i * 4);
    out.add(e.name, std::move(t));
  }
  return out;
}

void apply_group(const NamedTensors& loaded, const std::string& prefix,
                 ParameterSet<float>& params) {
  for (const auto& name : params.names()) {
    const std::string full = prefix + "/" + name;
    auto it = loaded.tensors.find(full);
    if (it == loaded.tensors.end())
      throw CheckpointError("checkpoint is missing tensor " + full);
    auto& dst = params.at(name);
    if (it->second.shape != dst.shape)
      throw CheckpointError("shape mismatch for " + full + ": checkpoint has " +
                            shape_string(it->second.shape) + ", model expects " +
                            shape_string(dst.shape));
    dst.data = it->second.data;
  }
}

bool has_group(const NamedTensors& loaded, const std::string& prefix) {
  const std::string p = prefix + "/";
  for (const auto& name : loaded.names)
    if (name.rfind(p, 0) == 0) return true;
  return false;
}

}  // namespace gzhybrid

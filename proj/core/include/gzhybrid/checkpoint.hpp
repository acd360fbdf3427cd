#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gzhybrid/tensor.hpp"

namespace gzhybrid {

// Checkpoint file layout:
//   magic "GZEVO1" | format version (uint32 LE) | manifest length (uint64 LE)
//   | manifest text | payload of little-endian float32 values.
// The manifest holds one line per tensor: name, shape (dims joined by 'x'),
// byte offset into the payload. Loading validates magic, version and shapes.

inline constexpr char kCheckpointMagic[6] = {'G', 'Z', 'E', 'V', 'O', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensors {
  std::vector<std::string> names;                    // manifest order
  std::map<std::string, Tensor<float>> tensors;

  void add(const std::string& name, Tensor<float> t) {
    names.push_back(name);
    tensors.emplace(name, std::move(t));
  }
  bool contains(const std::string& name) const { return tensors.count(name) > 0; }
};

// Flattens parameter groups under name prefixes ("online/encoder", ...).
NamedTensors flatten_groups(
    const std::vector<std::pair<std::string, const ParameterSet<float>*>>& groups);

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);

// Copies tensors under `prefix` into params (names must match exactly after
// stripping the prefix, shapes must agree).
void apply_group(const NamedTensors& loaded, const std::string& prefix,
                 ParameterSet<float>& params);

// True when any tensor name starts with the prefix.
bool has_group(const NamedTensors& loaded, const std::string& prefix);

}  // namespace gzhybrid

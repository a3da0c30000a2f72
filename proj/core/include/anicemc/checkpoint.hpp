#pragma once

#include "anicemc/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace anicemc {

/// Flat binary parameter container.
///
/// Layout, all integers little-endian:
///
///     magic      8 bytes   "ANICEMC\0"
///     version    u32       kCheckpointVersion
///     n_meta     u32
///     n_meta x { key_len u32, key bytes, value_len u32, value bytes }
///     n_tensor   u32
///     n_tensor x { name_len u32, name bytes, rank u32, rank x u64 dims,
///                  prod(dims) x f64 payload (IEEE-754 binary64, little-endian) }
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const std::string* meta(const std::string& key) const;
  const Tensor* tensor(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws IoError on truncated input, bad magic or unsupported version.
Checkpoint decode_checkpoint(const std::string& bytes);

/// Writes to a temporary sibling and renames over `path`.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Atomic text write (temp file + rename), shared by every output writer.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace anicemc

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "morphforge/core/tensor.hpp"

namespace morphforge {

inline constexpr int kArchiveVersion = 1;

/// Binary container: 8-byte magic, uint32 version, uint64 manifest length,
/// JSON manifest (caller fields plus an "entries" list of key and shape), then
/// the raw little-endian doubles of every entry in manifest order.
struct Archive {
  nlohmann::json manifest = nlohmann::json::object();
  std::map<std::string, Tensor> entries;
};

/// Written to a temporary sibling and renamed into place.
void save_archive(const std::filesystem::path& path, const Archive& archive);
/// DataError on a bad magic, unknown version or truncated payload.
Archive load_archive(const std::filesystem::path& path);

/// Writes `bytes` to path atomically (temporary file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace morphforge

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lcarep {

// One dataset image. `path` is relative to the manifest file's directory.
struct ImageRecord {
  std::string id;
  std::string path;
  std::optional<std::int64_t> class_id;
  std::optional<std::int64_t> pair_id;

  bool operator==(const ImageRecord&) const = default;
};

// Manifests are UTF-8 JSON Lines, one record per line, keys id/path and the
// optional class_id/pair_id. Reading and writing both validate: ids unique,
// every pair_id used by exactly two records. Violations name the line.
std::vector<ImageRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ImageRecord>& records);

// Validation shared by both directions; `origin` names the manifest in
// error messages.
void validate_manifest(const std::vector<ImageRecord>& records,
                       const std::string& origin);

// Image path of a record, resolved against its manifest's directory.
std::filesystem::path resolve_image_path(
    const std::filesystem::path& manifest_path, const ImageRecord& record);

}  // namespace lcarep

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lcarep {

// Teacher embeddings keyed by image id. On disk: a directory of <id>.tnsr
// unit vectors plus index.tsv with one "<id>\t<relative path>" line per
// entry, sorted by id so directories compare bit-for-bit across runs.
class PseudolabelStore {
 public:
  PseudolabelStore() = default;

  void put(const std::string& id, std::vector<float> embedding);

  // Lookup of an absent id is always a hard error, never a default.
  const std::vector<float>& get(const std::string& id) const;
  bool contains(const std::string& id) const;
  std::size_t size() const { return entries_.size(); }

  const std::map<std::string, std::vector<float>>& entries() const {
    return entries_;
  }

  void save(const std::filesystem::path& dir) const;
  static PseudolabelStore load(const std::filesystem::path& dir);

 private:
  std::map<std::string, std::vector<float>> entries_;
};

}  // namespace lcarep

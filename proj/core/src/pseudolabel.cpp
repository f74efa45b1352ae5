#include "lcarep/pseudolabel.hpp"

#include <cmath>
#include <fstream>

#include "lcarep/error.hpp"
#include "lcarep/tensor.hpp"
#include "lcarep/tensor_io.hpp"

namespace lcarep {

namespace {

void check_unit_norm(const std::string& id, const std::vector<float>& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  if (std::abs(norm - 1.0) > 1e-5)
    throw DatasetError("pseudolabel '" + id + "' is not unit norm (|v| = " +
                       std::to_string(norm) + ")");
}

// Ids become file names; keep them to a safe portable subset.
void check_id(const std::string& id) {
  if (id.empty()) throw DatasetError("pseudolabel id is empty");
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok)
      throw DatasetError("pseudolabel id '" + id +
                         "' contains a character unsafe for file names");
  }
  if (id[0] == '.') throw DatasetError("pseudolabel id may not start with '.'");
}

}  // namespace

void PseudolabelStore::put(const std::string& id,
                           std::vector<float> embedding) {
  check_id(id);
  check_unit_norm(id, embedding);
  if (!entries_.emplace(id, std::move(embedding)).second)
    throw DatasetError("duplicate pseudolabel id '" + id + "'");
}

const std::vector<float>& PseudolabelStore::get(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end())
    throw DatasetError("pseudolabel store has no entry for id '" + id + "'");
  return it->second;
}

bool PseudolabelStore::contains(const std::string& id) const {
  return entries_.count(id) != 0;
}

void PseudolabelStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.tsv", std::ios::trunc);
  if (!index)
    throw FormatError("pseudolabel store: cannot write index: " +
                      (dir / "index.tsv").string());
  for (const auto& [id, vec] : entries_) {
    const std::string rel = id + ".tnsr";
    write_tnsr(dir / rel, Tensor({vec.size()}, vec));
    index << id << "\t" << rel << "\n";
  }
  index.flush();
  if (!index)
    throw FormatError("pseudolabel store: index write failed: " +
                      (dir / "index.tsv").string());
}

PseudolabelStore PseudolabelStore::load(const std::filesystem::path& dir) {
  const std::filesystem::path index_path = dir / "index.tsv";
  std::ifstream index(index_path);
  if (!index)
    throw FormatError("pseudolabel store: cannot open index: " +
                      index_path.string());
  PseudolabelStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(index, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw FormatError(index_path.string() + ":" + std::to_string(line_no) +
                        ": expected '<id>\\t<path>'");
    const std::string id = line.substr(0, tab);
    const std::string rel = line.substr(tab + 1);
    Tensor t = read_tnsr(dir / rel);
    if (t.rank() != 1)
      throw FormatError(index_path.string() + ":" + std::to_string(line_no) +
                        ": pseudolabel '" + id + "' is not a vector");
    std::vector<float> vec(t.values().begin(), t.values().end());
    try {
      store.put(id, std::move(vec));
    } catch (const DatasetError& e) {
      throw FormatError(index_path.string() + ":" + std::to_string(line_no) +
                        ": " + e.what());
    }
  }
  return store;
}

}  // namespace lcarep

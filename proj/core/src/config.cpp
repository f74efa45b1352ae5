#include "lcarep/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcarep/error.hpp"

namespace lcarep {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config: key '" + key + "': cannot parse '" + value +
                    "' as " + expected);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  bad_value(key, value, "a bool (true|false)");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [p, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size())
    bad_value(key, value, "an unsigned integer");
  return out;
}

double parse_f64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(value, &pos);
    if (pos != value.size()) bad_value(key, value, "a number");
    return out;
  } catch (const std::logic_error&) {
    bad_value(key, value, "a number");
  }
}

std::vector<std::size_t> parse_channels(const std::string& key,
                                        const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_u64(key, trim(item)));
  if (out.empty()) bad_value(key, value, "a comma-separated channel list");
  return out;
}

// Shortest round-tripping decimal, so config.resolved is stable and exact.
std::string format_f64(double v) { return nlohmann::json(v).dump(); }

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "augment.brightness",   "augment.crop",
      "augment.flip",         "backbone.block_channels",
      "backbone.input_size",  "classifier.l2",
      "classifier.max_iters", "classifier.tol",
      "lca.include_1x1",      "lca.weighting",
      "loss.lambda",          "loss.margin",
      "loss.smooth_l1_beta",  "train.batch_size",
      "train.epochs",         "train.learning_rate",
      "train.momentum",       "train.pseudo_fraction",
      "train.seed",           "train.threads",
  };
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "backbone.input_size")
    backbone.input_size = parse_u64(key, value);
  else if (key == "backbone.block_channels")
    backbone.block_channels = parse_channels(key, value);
  else if (key == "lca.include_1x1")
    backbone.lca.include_1x1 = parse_bool(key, value);
  else if (key == "lca.weighting") {
    if (value == "flat")
      backbone.lca.weighting = LcaWeighting::kFlatOverWindows;
    else if (value == "per_size")
      backbone.lca.weighting = LcaWeighting::kUniformPerSize;
    else
      bad_value(key, value, "a weighting (flat|per_size)");
  } else if (key == "train.epochs")
    train.epochs = parse_u64(key, value);
  else if (key == "train.batch_size")
    train.batch_size = parse_u64(key, value);
  else if (key == "train.learning_rate")
    train.learning_rate = parse_f64(key, value);
  else if (key == "train.momentum")
    train.momentum = parse_f64(key, value);
  else if (key == "train.seed")
    train.seed = parse_u64(key, value);
  else if (key == "train.pseudo_fraction")
    train.pseudo_fraction = parse_f64(key, value);
  else if (key == "train.threads")
    train.threads = parse_u64(key, value);
  else if (key == "loss.margin")
    train.loss.margin = parse_f64(key, value);
  else if (key == "loss.smooth_l1_beta")
    train.loss.smooth_l1_beta = parse_f64(key, value);
  else if (key == "loss.lambda")
    train.loss.lambda = parse_f64(key, value);
  else if (key == "augment.flip")
    train.augment.flip = parse_bool(key, value);
  else if (key == "augment.crop")
    train.augment.crop = parse_bool(key, value);
  else if (key == "augment.brightness")
    train.augment.brightness = parse_bool(key, value);
  else if (key == "classifier.l2")
    classifier_l2 = parse_f64(key, value);
  else if (key == "classifier.max_iters")
    classifier_max_iters = parse_u64(key, value);
  else if (key == "classifier.tol")
    classifier_tol = parse_f64(key, value);
  else
    throw ConfigError("config: unknown key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
  if (key == "backbone.input_size")
    return std::to_string(backbone.input_size);
  if (key == "backbone.block_channels") {
    std::string out;
    for (std::size_t c : backbone.block_channels) {
      if (!out.empty()) out += ",";
      out += std::to_string(c);
    }
    return out;
  }
  if (key == "lca.include_1x1")
    return backbone.lca.include_1x1 ? "true" : "false";
  if (key == "lca.weighting")
    return backbone.lca.weighting == LcaWeighting::kFlatOverWindows
               ? "flat"
               : "per_size";
  if (key == "train.epochs") return std::to_string(train.epochs);
  if (key == "train.batch_size") return std::to_string(train.batch_size);
  if (key == "train.learning_rate") return format_f64(train.learning_rate);
  if (key == "train.momentum") return format_f64(train.momentum);
  if (key == "train.seed") return std::to_string(train.seed);
  if (key == "train.pseudo_fraction") return format_f64(train.pseudo_fraction);
  if (key == "train.threads") return std::to_string(train.threads);
  if (key == "loss.margin") return format_f64(train.loss.margin);
  if (key == "loss.smooth_l1_beta") return format_f64(train.loss.smooth_l1_beta);
  if (key == "loss.lambda") return format_f64(train.loss.lambda);
  if (key == "augment.flip") return train.augment.flip ? "true" : "false";
  if (key == "augment.crop") return train.augment.crop ? "true" : "false";
  if (key == "augment.brightness")
    return train.augment.brightness ? "true" : "false";
  if (key == "classifier.l2") return format_f64(classifier_l2);
  if (key == "classifier.max_iters") return std::to_string(classifier_max_iters);
  if (key == "classifier.tol") return format_f64(classifier_tol);
  throw ConfigError("config: unknown key '" + key + "'");
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path.string() + ":" +
                        std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: " + path.string() + ":" +
                        std::to_string(line_no) + ": expected 'key = value'");
    set(key, value);
  }
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const std::string& key : known_keys())
    out += key + " = " + get(key) + "\n";
  return out;
}

void RunConfig::write_resolved(const std::filesystem::path& directory) const {
  std::ofstream f(directory / "config.resolved");
  if (!f)
    throw ConfigError("config: cannot write resolved config under " +
                      directory.string());
  f << resolved();
}

}  // namespace lcarep

#include "lcarep/synthetic.hpp"

#include <array>
#include <fstream>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "lcarep/error.hpp"
#include "lcarep/image.hpp"
#include "lcarep/manifest.hpp"
#include "lcarep/rng.hpp"

namespace lcarep {

namespace {

using Color = std::array<float, 3>;

// Independent seed streams per concern, so adding images to one manifest
// never shifts the pixels of another.
constexpr std::uint64_t kTagRepPalette = 0x52455050ULL;   // rep-class colors
constexpr std::uint64_t kTagProbePalette = 0x50524F42ULL; // probe-class colors
constexpr std::uint64_t kTagRender = 0x52454E44ULL;       // class layout
constexpr std::uint64_t kTagDistort = 0x44495354ULL;      // per-image views

// 7x7x7 RGB lattice with spacing 1/6: any two lattice points differ by more
// than 0.1 in some channel, which is what makes distinct label colors (and
// with them the label band, a quarter of every render) provably
// discriminable.
Color lattice_color(std::size_t index) {
  const std::size_t r = index / 49, g = (index / 7) % 7, b = index % 7;
  return {static_cast<float>(r) / 6.0f, static_cast<float>(g) / 6.0f,
          static_cast<float>(b) / 6.0f};
}

// Probe classes draw from the central 3x3x3 sub-lattice: pairwise still a
// full lattice step apart, but clustered tightly enough that brightness
// jitter makes raw color an ambiguous cue. Telling probe classes apart then
// hinges on layout structure, which is the point of the probe.
bool in_probe_sublattice(std::size_t index) {
  const std::size_t r = index / 49, g = (index / 7) % 7, b = index % 7;
  return r >= 2 && r <= 4 && g >= 2 && g <= 4 && b >= 2 && b <= 4;
}

Color label_color(const SyntheticSpec& spec, std::size_t class_id) {
  std::vector<std::size_t> pool;
  std::uint64_t tag;
  std::size_t offset_in_pool;
  if (class_id < spec.n_classes) {
    for (std::size_t i = 0; i < 343; ++i)
      if (!in_probe_sublattice(i)) pool.push_back(i);
    tag = kTagRepPalette;
    offset_in_pool = class_id;
  } else {
    for (std::size_t i = 0; i < 343; ++i)
      if (in_probe_sublattice(i)) pool.push_back(i);
    tag = kTagProbePalette;
    offset_in_pool = class_id - spec.n_classes;
  }
  Rng rng(mix_seed(spec.seed, tag));
  rng.shuffle(pool);
  return lattice_color(pool.at(offset_in_pool));
}

void fill_rect(Tensor& img, std::size_t r0, std::size_t r1, std::size_t c0,
               std::size_t c1, const Color& color) {
  for (std::size_t i = r0; i < r1; ++i)
    for (std::size_t j = c0; j < c1; ++j)
      for (std::size_t c = 0; c < 3; ++c) img.at(i, j, c) = color[c];
}

void fill_disk(Tensor& img, double ci, double cj, double radius,
               const Color& color) {
  const std::size_t H = img.dim(0), W = img.dim(1);
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      const double di = static_cast<double>(i) - ci;
      const double dj = static_cast<double>(j) - cj;
      if (di * di + dj * dj <= radius * radius)
        for (std::size_t c = 0; c < 3; ++c) img.at(i, j, c) = color[c];
    }
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_classes < 2)
    throw ConfigError("synthetic: n_classes must be at least 2");
  if (n_classes > 300)
    throw ConfigError("synthetic: n_classes exceeds the 300-color palette");
  if (probe_classes > 27)
    throw ConfigError("synthetic: probe_classes exceeds the 27-color palette");
  if (images_per_class < 2 || images_per_class % 2 != 0)
    throw ConfigError(
        "synthetic: images_per_class must be even and at least 2 (two views "
        "per pair)");
  if (side < 16 || side > 512)
    throw ConfigError("synthetic: side must lie in [16, 512]");
  if (!(distortion >= 0.0 && distortion <= 1.0))
    throw ConfigError("synthetic: distortion must lie in [0, 1]");
  if (probe_classes > 0 && probe_classes < 2)
    throw ConfigError("synthetic: probe_classes must be 0 or at least 2");
}

SyntheticSpec SyntheticSpec::from_json_file(
    const std::filesystem::path& path) {
  std::ifstream f(path);
  if (f.fail()) throw ConfigError("synthetic spec: cannot open: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("synthetic spec: " + path.string() + ": " + e.what());
  }
  if (!j.is_object())
    throw ConfigError("synthetic spec: top level must be a JSON object");

  SyntheticSpec spec;
  for (const auto& [key, value] : j.items()) {
    auto as_count = [&](const char* name) -> std::size_t {
      if (!value.is_number_unsigned())
        throw ConfigError(std::string("synthetic spec: ") + name +
                          " must be a nonnegative integer");
      return value.get<std::size_t>();
    };
    if (key == "n_classes") spec.n_classes = as_count("n_classes");
    else if (key == "images_per_class")
      spec.images_per_class = as_count("images_per_class");
    else if (key == "heldout_pairs_per_class")
      spec.heldout_pairs_per_class = as_count("heldout_pairs_per_class");
    else if (key == "unlabeled_per_class")
      spec.unlabeled_per_class = as_count("unlabeled_per_class");
    else if (key == "unlabeled_heldout_per_class")
      spec.unlabeled_heldout_per_class = as_count("unlabeled_heldout_per_class");
    else if (key == "probe_classes") spec.probe_classes = as_count("probe_classes");
    else if (key == "probe_train_per_class")
      spec.probe_train_per_class = as_count("probe_train_per_class");
    else if (key == "probe_test_per_class")
      spec.probe_test_per_class = as_count("probe_test_per_class");
    else if (key == "side") spec.side = as_count("side");
    else if (key == "seed") spec.seed = as_count("seed");
    else if (key == "distortion") {
      if (!value.is_number())
        throw ConfigError("synthetic spec: distortion must be a number");
      spec.distortion = value.get<double>();
    } else {
      throw ConfigError("synthetic spec: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

void SyntheticSpec::to_json_file(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["n_classes"] = n_classes;
  j["images_per_class"] = images_per_class;
  j["heldout_pairs_per_class"] = heldout_pairs_per_class;
  j["unlabeled_per_class"] = unlabeled_per_class;
  j["unlabeled_heldout_per_class"] = unlabeled_heldout_per_class;
  j["probe_classes"] = probe_classes;
  j["probe_train_per_class"] = probe_train_per_class;
  j["probe_test_per_class"] = probe_test_per_class;
  j["side"] = side;
  j["distortion"] = distortion;
  j["seed"] = seed;
  std::ofstream f(path, std::ios::trunc);
  if (!f)
    throw ConfigError("synthetic spec: cannot write: " + path.string());
  f << j.dump(2) << "\n";
}

Tensor render_class(const SyntheticSpec& spec, std::size_t class_id) {
  if (class_id >= spec.n_classes + spec.probe_classes)
    throw std::invalid_argument("render_class: class id out of range");
  const std::size_t S = spec.side;
  Rng rng(mix_seed(mix_seed(spec.seed, kTagRender), class_id));

  Tensor img({S, S, 3});
  // Light neutral ground.
  const float ground = static_cast<float>(rng.uniform(0.86, 0.96));
  fill_rect(img, 0, S, 0, S, {ground, ground, ground});

  const Color label = label_color(spec, class_id);
  auto accent = [&]() -> Color {
    return lattice_color(rng.uniform_index(343));
  };
  const Color accent1 = accent();
  const Color accent2 = accent();
  const Color dark = {0.08f, 0.08f, 0.12f};

  // Top region: stripes in one of two orientations.
  const std::size_t band_top = (S * 22) / 64;
  const std::size_t stripe_w = 2 + rng.uniform_index(S / 8);
  const bool vertical = rng.bernoulli(0.5);
  for (std::size_t k = 0; k * stripe_w < S; ++k) {
    if (k % 2 == 0) continue;
    const std::size_t lo = k * stripe_w;
    const std::size_t hi = std::min(S, lo + stripe_w);
    if (vertical)
      fill_rect(img, 0, band_top, lo, hi, accent1);
    else if (lo < band_top)
      fill_rect(img, lo, std::min(band_top, hi), 0, S, accent1);
  }
  // One disk accent in the stripe region.
  const double disk_r = static_cast<double>(S) * rng.uniform(0.05, 0.12);
  const double disk_i = rng.uniform(disk_r, static_cast<double>(band_top) - disk_r);
  const double disk_j = rng.uniform(disk_r, static_cast<double>(S) - disk_r);
  fill_disk(img, disk_i, disk_j, disk_r, accent2);

  // Label band: pure label color, *never* overdrawn. This quarter of the
  // image carries the pairwise-discriminability guarantee.
  const std::size_t band_bot = (S * 38) / 64;
  fill_rect(img, band_top, band_bot, 0, S, label);

  // Bottom region: glyph grid (barcode stand-in), cells on/off per class.
  const std::size_t cell = std::max<std::size_t>(2, S / 8);
  const std::size_t rows = (S - band_bot) / cell;
  const std::size_t cols = S / cell;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (rng.bernoulli(0.5)) {
        const std::size_t r0 = band_bot + r * cell;
        fill_rect(img, r0 + 1, r0 + cell, c * cell + 1, (c + 1) * cell, dark);
      }
  return img;
}

void gen_synthetic(const SyntheticSpec& spec,
                   const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir / "images");

  // Canonical renders, checked pairwise: at least 10% of pixels must differ
  // by more than 0.1 between any two classes.
  const std::size_t total_classes = spec.n_classes + spec.probe_classes;
  std::vector<Tensor> renders;
  renders.reserve(total_classes);
  for (std::size_t k = 0; k < total_classes; ++k)
    renders.push_back(render_class(spec, k));
  const std::size_t n_px = spec.side * spec.side;
  for (std::size_t a = 0; a < total_classes; ++a)
    for (std::size_t b = a + 1; b < total_classes; ++b) {
      std::size_t differing = 0;
      for (std::size_t p = 0; p < n_px; ++p)
        for (std::size_t c = 0; c < 3; ++c)
          if (std::abs(renders[a][p * 3 + c] - renders[b][p * 3 + c]) > 0.1f) {
            ++differing;
            break;
          }
      if (differing * 10 < n_px)
        throw DatasetError("synthetic: classes " + std::to_string(a) + " and " +
                           std::to_string(b) +
                           " are not discriminable (differing pixels " +
                           std::to_string(differing) + "/" +
                           std::to_string(n_px) + ")");
    }

  const AugmentParams params = distortion_params(spec.distortion);
  const AugmentSwitches all_on{};
  std::uint64_t image_counter = 0;
  auto emit = [&](const std::string& id, std::size_t class_id) {
    Rng view_rng(
        mix_seed(mix_seed(spec.seed, kTagDistort), image_counter++));
    const Tensor view = augment(renders[class_id], all_on, params, view_rng);
    write_ppm(out_dir / "images" / (id + ".ppm"), view);
    return "images/" + id + ".ppm";
  };

  // Supervised pairs over the representation-learning classes.
  const std::size_t pairs_per_class = spec.images_per_class / 2;
  std::vector<ImageRecord> pairs, pairs_heldout;
  std::int64_t pair_id = 0;
  for (std::size_t k = 0; k < spec.n_classes; ++k)
    for (std::size_t p = 0; p < pairs_per_class; ++p, ++pair_id)
      for (char half : {'a', 'b'}) {
        const std::string id = "p" + std::to_string(pair_id) + half;
        pairs.push_back({id, emit(id, k), static_cast<std::int64_t>(k),
                         pair_id});
      }
  for (std::size_t k = 0; k < spec.n_classes; ++k)
    for (std::size_t p = 0; p < spec.heldout_pairs_per_class; ++p, ++pair_id)
      for (char half : {'a', 'b'}) {
        const std::string id = "p" + std::to_string(pair_id) + half;
        pairs_heldout.push_back(
            {id, emit(id, k), static_cast<std::int64_t>(k), pair_id});
      }

  // Unlabeled singles (same class population, no annotations carried).
  std::vector<ImageRecord> unlabeled, unlabeled_heldout;
  std::size_t serial = 0;
  for (std::size_t k = 0; k < spec.n_classes; ++k)
    for (std::size_t u = 0; u < spec.unlabeled_per_class; ++u, ++serial) {
      const std::string id = "u" + std::to_string(serial);
      unlabeled.push_back({id, emit(id, k), std::nullopt, std::nullopt});
    }
  serial = 0;
  for (std::size_t k = 0; k < spec.n_classes; ++k)
    for (std::size_t u = 0; u < spec.unlabeled_heldout_per_class;
         ++u, ++serial) {
      const std::string id = "uh" + std::to_string(serial);
      unlabeled_heldout.push_back({id, emit(id, k), std::nullopt, std::nullopt});
    }

  // One-shot probe: disjoint classes, 1 (default) train view, several test
  // views, all distorted like everything else.
  std::vector<ImageRecord> probe_train, probe_test;
  for (std::size_t pk = 0; pk < spec.probe_classes; ++pk) {
    const std::size_t class_id = spec.n_classes + pk;
    for (std::size_t t = 0; t < spec.probe_train_per_class; ++t) {
      const std::string id =
          "c" + std::to_string(class_id) + "t" + std::to_string(t);
      probe_train.push_back({id, emit(id, class_id),
                             static_cast<std::int64_t>(class_id), std::nullopt});
    }
    for (std::size_t t = 0; t < spec.probe_test_per_class; ++t) {
      const std::string id =
          "c" + std::to_string(class_id) + "e" + std::to_string(t);
      probe_test.push_back({id, emit(id, class_id),
                            static_cast<std::int64_t>(class_id), std::nullopt});
    }
  }

  write_manifest(out_dir / "pairs.jsonl", pairs);
  write_manifest(out_dir / "pairs_heldout.jsonl", pairs_heldout);
  write_manifest(out_dir / "unlabeled.jsonl", unlabeled);
  write_manifest(out_dir / "unlabeled_heldout.jsonl", unlabeled_heldout);
  write_manifest(out_dir / "probe_train.jsonl", probe_train);
  write_manifest(out_dir / "probe_test.jsonl", probe_test);
}

}  // namespace lcarep

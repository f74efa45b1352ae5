#include "lcarep/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "lcarep/error.hpp"

namespace lcarep {

namespace {

// Header scanner with byte-offset tracking for error reporting. PPM headers
// are whitespace-separated ASCII tokens; '#' starts a comment to end of line.
class HeaderScanner {
 public:
  HeaderScanner(const std::string& bytes, const std::string& origin)
      : bytes_(bytes), origin_(origin) {}

  std::size_t pos() const { return pos_; }

  void expect_magic() {
    if (bytes_.size() < 2 || bytes_[0] != 'P' || bytes_[1] != '6')
      fail(0, "not a P6 PPM file");
    pos_ = 2;
  }

  std::uint64_t read_uint(const char* what) {
    skip_separators();
    if (pos_ >= bytes_.size() || !is_digit(bytes_[pos_]))
      fail(pos_, std::string("expected ") + what);
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && is_digit(bytes_[pos_])) {
      v = v * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
      if (v > (1ULL << 32)) fail(pos_, std::string(what) + " out of range");
      ++pos_;
    }
    return v;
  }

  // The header ends with exactly one whitespace byte before the payload.
  void consume_payload_separator() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_]))
      fail(pos_, "expected whitespace before pixel data");
    ++pos_;
  }

  [[noreturn]] void fail(std::size_t offset, const std::string& what) const {
    throw FormatError(origin_ + ": " + what + " at byte offset " +
                      std::to_string(offset));
  }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
           c == '\f';
  }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  void skip_separators() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

Tensor read_ppm(const std::filesystem::path& path) {
  const std::string origin = path.string();
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("ppm: cannot open: " + origin);
  std::ostringstream buf(std::ios::binary);
  buf << f.rdbuf();
  const std::string bytes = buf.str();

  HeaderScanner sc(bytes, origin);
  sc.expect_magic();
  const std::uint64_t width = sc.read_uint("width");
  const std::uint64_t height = sc.read_uint("height");
  const std::uint64_t maxval = sc.read_uint("maxval");
  if (width == 0 || height == 0) sc.fail(sc.pos(), "zero image dimension");
  if (maxval != 255) sc.fail(sc.pos(), "maxval must be 255");
  sc.consume_payload_separator();

  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - sc.pos() < need)
    sc.fail(bytes.size(), "truncated pixel data");
  if (bytes.size() - sc.pos() > need)
    sc.fail(sc.pos() + need, "trailing bytes after pixel data");

  Tensor image({static_cast<std::size_t>(height),
                static_cast<std::size_t>(width), 3});
  const unsigned char* p =
      reinterpret_cast<const unsigned char*>(bytes.data() + sc.pos());
  for (std::size_t k = 0; k < need; ++k)
    image[k] = static_cast<float>(p[k]) / 255.0f;
  return image;
}

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3)
    throw std::invalid_argument("ppm: expected an H x W x 3 image tensor");
  const std::size_t H = image.dim(0), W = image.dim(1);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("ppm: cannot open for writing: " + path.string());
  f << "P6\n" << W << " " << H << "\n255\n";
  std::string payload(H * W * 3, '\0');
  for (std::size_t k = 0; k < payload.size(); ++k) {
    const double v = std::clamp(static_cast<double>(image[k]), 0.0, 1.0);
    payload[k] = static_cast<char>(
        static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  f.flush();
  if (!f) throw FormatError("ppm: write failed: " + path.string());
}

Tensor bilinear_resize(const Tensor& image, std::size_t out_h,
                       std::size_t out_w) {
  if (image.rank() != 3)
    throw std::invalid_argument("resize: expected a rank-3 image tensor");
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize: output side must be positive");
  const std::size_t H = image.dim(0), W = image.dim(1), C = image.dim(2);

  const double sy = static_cast<double>(H) / static_cast<double>(out_h);
  const double sx = static_cast<double>(W) / static_cast<double>(out_w);
  Tensor out({out_h, out_w, C});
  for (std::size_t i = 0; i < out_h; ++i) {
    // Align-corners-false: sample at pixel centers of the source grid.
    double y = (static_cast<double>(i) + 0.5) * sy - 0.5;
    y = std::clamp(y, 0.0, static_cast<double>(H - 1));
    const std::size_t y0 = static_cast<std::size_t>(y);
    const std::size_t y1 = std::min(y0 + 1, H - 1);
    const double ty = y - static_cast<double>(y0);
    for (std::size_t j = 0; j < out_w; ++j) {
      double x = (static_cast<double>(j) + 0.5) * sx - 0.5;
      x = std::clamp(x, 0.0, static_cast<double>(W - 1));
      const std::size_t x0 = static_cast<std::size_t>(x);
      const std::size_t x1 = std::min(x0 + 1, W - 1);
      const double tx = x - static_cast<double>(x0);
      for (std::size_t c = 0; c < C; ++c) {
        const double top = (1.0 - tx) * image.at(y0, x0, c) +
                           tx * image.at(y0, x1, c);
        const double bot = (1.0 - tx) * image.at(y1, x0, c) +
                           tx * image.at(y1, x1, c);
        const double v = (1.0 - ty) * top + ty * bot;
        out.at(i, j, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

Tensor flip_horizontal(const Tensor& image) {
  if (image.rank() != 3)
    throw std::invalid_argument("flip: expected a rank-3 image tensor");
  const std::size_t H = image.dim(0), W = image.dim(1), C = image.dim(2);
  Tensor out(image.dims());
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j)
      for (std::size_t c = 0; c < C; ++c)
        out.at(i, j, c) = image.at(i, W - 1 - j, c);
  return out;
}

AugmentParams distortion_params(double level) {
  if (!(level >= 0.0 && level <= 1.0))
    throw std::invalid_argument("distortion level must lie in [0, 1]");
  AugmentParams p;
  p.p_apply = 0.5 * std::min(1.0, 2.0 * level);
  p.crop_retain = 1.0 - 0.25 * level;
  p.brightness_lo = 1.0 - 0.4 * level;
  p.brightness_hi = 1.0 + 0.5 * level;
  return p;
}

Tensor augment(const Tensor& image, const AugmentSwitches& sw,
               const AugmentParams& params, Rng& rng) {
  if (image.rank() != 3)
    throw std::invalid_argument("augment: expected a rank-3 image tensor");
  Tensor out = image;

  if (sw.flip && rng.bernoulli(params.p_apply)) out = flip_horizontal(out);

  if (sw.crop && rng.bernoulli(params.p_apply)) {
    const std::size_t H = out.dim(0), W = out.dim(1), C = out.dim(2);
    const std::size_t ch = std::clamp<std::size_t>(
        static_cast<std::size_t>(
            std::llround(static_cast<double>(H) * params.crop_retain)),
        1, H);
    const std::size_t cw = std::clamp<std::size_t>(
        static_cast<std::size_t>(
            std::llround(static_cast<double>(W) * params.crop_retain)),
        1, W);
    const std::size_t top = rng.uniform_index(H - ch + 1);
    const std::size_t left = rng.uniform_index(W - cw + 1);
    Tensor crop({ch, cw, C});
    for (std::size_t i = 0; i < ch; ++i)
      for (std::size_t j = 0; j < cw; ++j)
        for (std::size_t c = 0; c < C; ++c)
          crop.at(i, j, c) = out.at(top + i, left + j, c);
    out = bilinear_resize(crop, H, W);
  }

  if (sw.brightness && rng.bernoulli(params.p_apply)) {
    const double scale =
        rng.uniform(params.brightness_lo, params.brightness_hi);
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = static_cast<float>(
          std::clamp(static_cast<double>(out[k]) * scale, 0.0, 1.0));
  }
  return out;
}

}  // namespace lcarep

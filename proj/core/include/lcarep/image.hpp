#pragma once

#include <filesystem>

#include "lcarep/rng.hpp"
#include "lcarep/tensor.hpp"

namespace lcarep {

// Images are H x W x 3 tensors with values in [0, 1], mapped exactly from
// 8-bit channels as v / 255. Binary PPM (P6, maxval 255) is the sole codec.

Tensor read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensor& image);

// Align-corners-false bilinear sampling; channel count is preserved.
Tensor bilinear_resize(const Tensor& image, std::size_t out_h,
                       std::size_t out_w);
inline Tensor bilinear_resize_square(const Tensor& image,
                                     std::size_t out_side) {
  return bilinear_resize(image, out_side, out_side);
}

struct AugmentSwitches {
  bool flip = true;
  bool crop = true;
  bool brightness = true;
};

// Each enabled transform fires independently with probability p_apply.
// The defaults are the training augmentation: crop to 87.5% of the side and
// resize back, brightness scale in [0.8, 1.25] clamped to [0, 1].
struct AugmentParams {
  double p_apply = 0.5;
  double crop_retain = 0.875;
  double brightness_lo = 0.8;
  double brightness_hi = 1.25;
};

// Maps a distortion level in [0, 1] onto augmentation strength: level 0 is
// the identity (nothing ever fires), level 0.5 reproduces the training
// defaults, level 1 doubles the crop loss and widens brightness further.
AugmentParams distortion_params(double level);

// Draw order per image is fixed (flip gate, crop gate + offsets, brightness
// gate + factor), so a given rng stream always yields the same pixels.
Tensor augment(const Tensor& image, const AugmentSwitches& sw,
               const AugmentParams& params, Rng& rng);
inline Tensor augment(const Tensor& image, const AugmentSwitches& sw,
                      Rng& rng) {
  return augment(image, sw, AugmentParams{}, rng);
}

Tensor flip_horizontal(const Tensor& image);

}  // namespace lcarep

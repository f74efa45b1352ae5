#include "lcarep/image.hpp"

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "lcarep/error.hpp"
#include "lcarep/rng.hpp"

using namespace lcarep;
namespace fs = std::filesystem;

namespace {

class ImageTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("image_test_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path file(const std::string& name) const { return dir_ / name; }

  fs::path write_bytes(const std::string& name, const std::string& bytes) {
    const fs::path p = file(name);
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    return p;
  }

  fs::path dir_;
};

std::string ppm_bytes(const std::string& header, std::size_t payload) {
  std::string s = header;
  for (std::size_t k = 0; k < payload; ++k)
    s.push_back(static_cast<char>(static_cast<unsigned char>(k % 256)));
  return s;
}

}  // namespace

TEST_F(ImageTest, RoundTripIsByteExact) {
  Tensor img({3, 2, 3});
  for (std::size_t k = 0; k < img.size(); ++k)
    img[k] = static_cast<float>((k * 13) % 256) / 255.0f;
  write_ppm(file("rt.ppm"), img);
  const Tensor back = read_ppm(file("rt.ppm"));
  ASSERT_EQ(back.dims(), img.dims());
  for (std::size_t k = 0; k < img.size(); ++k) EXPECT_EQ(back[k], img[k]);
}

TEST_F(ImageTest, WriteClampsOutOfRangeValues) {
  Tensor img({1, 2, 3});
  for (std::size_t k = 0; k < 3; ++k) img[k] = 1.5f;
  for (std::size_t k = 3; k < 6; ++k) img[k] = -0.2f;
  write_ppm(file("clamp.ppm"), img);
  const Tensor back = read_ppm(file("clamp.ppm"));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(back[k], 1.0f);
  for (std::size_t k = 3; k < 6; ++k) EXPECT_EQ(back[k], 0.0f);
}

TEST_F(ImageTest, HeaderCommentsAreSkipped) {
  const auto p = write_bytes(
      "c.ppm", ppm_bytes("P6\n# width and height\n2 2\n# maxval\n255\n", 12));
  const Tensor img = read_ppm(p);
  EXPECT_EQ(img.dims(), (std::vector<std::size_t>{2, 2, 3}));
  EXPECT_EQ(img[5], 5.0f / 255.0f);
}

TEST_F(ImageTest, RejectsWrongMagic) {
  const auto p = write_bytes("p5.ppm", ppm_bytes("P5\n2 2\n255\n", 12));
  try {
    read_ppm(p);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("not a P6"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("offset 0"), std::string::npos);
  }
}

TEST_F(ImageTest, RejectsBadMaxval) {
  const auto p = write_bytes("mv.ppm", ppm_bytes("P6\n2 2\n65535\n", 24));
  EXPECT_THROW(read_ppm(p), FormatError);
}

TEST_F(ImageTest, RejectsTruncatedPayload) {
  const auto p = write_bytes("tr.ppm", ppm_bytes("P6\n2 2\n255\n", 11));
  try {
    read_ppm(p);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST_F(ImageTest, RejectsTrailingBytes) {
  const auto p = write_bytes("tb.ppm", ppm_bytes("P6\n2 2\n255\n", 13));
  EXPECT_THROW(read_ppm(p), FormatError);
}

TEST_F(ImageTest, RejectsZeroDimensionAndMissingFile) {
  const auto p = write_bytes("z.ppm", ppm_bytes("P6\n0 2\n255\n", 0));
  EXPECT_THROW(read_ppm(p), FormatError);
  EXPECT_THROW(read_ppm(file("absent.ppm")), FormatError);
}

TEST(Bilinear, TwoXUpsampleOfColumnPattern) {
  Tensor col({2, 1, 1});
  col.at(0, 0, 0) = 0.0f;
  col.at(1, 0, 0) = 1.0f;
  const Tensor up = bilinear_resize(col, 4, 1);
  EXPECT_FLOAT_EQ(up.at(0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(up.at(1, 0, 0), 0.25f);
  EXPECT_FLOAT_EQ(up.at(2, 0, 0), 0.75f);
  EXPECT_FLOAT_EQ(up.at(3, 0, 0), 1.0f);
}

TEST(Bilinear, SameSizeIsIdentity) {
  Rng rng(9);
  Tensor img({5, 7, 3});
  for (auto& v : img.values()) v = static_cast<float>(rng.uniform());
  const Tensor out = bilinear_resize(img, 5, 7);
  for (std::size_t k = 0; k < img.size(); ++k) EXPECT_EQ(out[k], img[k]);
}

TEST(Bilinear, Errors) {
  Tensor notimg({2, 2});
  EXPECT_THROW(bilinear_resize(notimg, 2, 2), std::invalid_argument);
  Tensor img({2, 2, 1});
  EXPECT_THROW(bilinear_resize(img, 0, 2), std::invalid_argument);
}

TEST(Flip, ReversesColumnsAndIsInvolutive) {
  Tensor img({1, 3, 1});
  img.at(0, 0, 0) = 1.0f;
  img.at(0, 1, 0) = 2.0f;
  img.at(0, 2, 0) = 3.0f;
  const Tensor f = flip_horizontal(img);
  EXPECT_EQ(f.at(0, 0, 0), 3.0f);
  EXPECT_EQ(f.at(0, 1, 0), 2.0f);
  EXPECT_EQ(f.at(0, 2, 0), 1.0f);
  const Tensor ff = flip_horizontal(f);
  for (std::size_t k = 0; k < img.size(); ++k) EXPECT_EQ(ff[k], img[k]);
}

TEST(Distortion, LevelMapIsFrozen) {
  const AugmentParams p0 = distortion_params(0.0);
  EXPECT_EQ(p0.p_apply, 0.0);
  EXPECT_EQ(p0.crop_retain, 1.0);
  EXPECT_EQ(p0.brightness_lo, 1.0);
  EXPECT_EQ(p0.brightness_hi, 1.0);

  // Level 0.5 reproduces the training defaults.
  const AugmentParams p5 = distortion_params(0.5);
  const AugmentParams defaults;
  EXPECT_DOUBLE_EQ(p5.p_apply, defaults.p_apply);
  EXPECT_DOUBLE_EQ(p5.crop_retain, defaults.crop_retain);
  EXPECT_DOUBLE_EQ(p5.brightness_lo, defaults.brightness_lo);
  EXPECT_DOUBLE_EQ(p5.brightness_hi, defaults.brightness_hi);

  const AugmentParams p1 = distortion_params(1.0);
  EXPECT_DOUBLE_EQ(p1.p_apply, 0.5);
  EXPECT_DOUBLE_EQ(p1.crop_retain, 0.75);
  EXPECT_DOUBLE_EQ(p1.brightness_lo, 0.6);
  EXPECT_DOUBLE_EQ(p1.brightness_hi, 1.5);

  EXPECT_THROW(distortion_params(-0.1), std::invalid_argument);
  EXPECT_THROW(distortion_params(1.1), std::invalid_argument);
}

TEST(Augment, DeterministicGivenSeed) {
  Rng src(21);
  Tensor img({16, 16, 3});
  for (auto& v : img.values()) v = static_cast<float>(src.uniform());
  const AugmentParams params = distortion_params(0.8);
  Rng a(77), b(77);
  const Tensor ta = augment(img, AugmentSwitches{}, params, a);
  const Tensor tb = augment(img, AugmentSwitches{}, params, b);
  ASSERT_EQ(ta.dims(), tb.dims());
  for (std::size_t k = 0; k < ta.size(); ++k) EXPECT_EQ(ta[k], tb[k]);
}

TEST(Augment, LevelZeroAndAllOffAreIdentity) {
  Rng src(22);
  Tensor img({8, 8, 3});
  for (auto& v : img.values()) v = static_cast<float>(src.uniform());

  Rng r1(5);
  const Tensor t0 = augment(img, AugmentSwitches{}, distortion_params(0.0), r1);
  for (std::size_t k = 0; k < img.size(); ++k) EXPECT_EQ(t0[k], img[k]);

  AugmentSwitches off;
  off.flip = off.crop = off.brightness = false;
  Rng r2(5);
  const Tensor t1 = augment(img, off, distortion_params(1.0), r2);
  for (std::size_t k = 0; k < img.size(); ++k) EXPECT_EQ(t1[k], img[k]);
}

TEST(Augment, PreservesShapeAndRange) {
  Rng src(23);
  Tensor img({12, 12, 3});
  for (auto& v : img.values()) v = static_cast<float>(src.uniform());
  Rng r(31);
  const AugmentParams params = distortion_params(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor t = augment(img, AugmentSwitches{}, params, r);
    ASSERT_EQ(t.dims(), img.dims());
    for (const float v : t.values()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

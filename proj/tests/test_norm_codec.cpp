#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "anglekv/error.hpp"
#include "anglekv/norm_codec.hpp"

using namespace anglekv;

namespace {

std::vector<float> lognormal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double to_space(float r, NormSpace s) {
  return s == NormSpace::Log ? std::log(std::max<double>(r, kLogEpsilon)) : r;
}

double mean_rel_error(const std::vector<float>& r, const NormQuantSpec& spec) {
  const auto back = dequantize_norms(quantize_norms(r, spec), spec);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += std::abs(back[i] - r[i]) / r[i];
  return s / r.size();
}

}  // namespace

TEST(NormCodec, LinearEndpoints) {
  const auto q = quantize_norms(std::vector<float>{0, 255}, NormQuantSpec::linear(8));
  EXPECT_EQ(q.r_min, 0.0f);
  EXPECT_EQ(q.r_max, 255.0f);
  EXPECT_EQ(q.codes, (std::vector<std::uint16_t>{0, 255}));
  EXPECT_EQ(dequantize_norms(q, NormQuantSpec::linear(8)), (std::vector<float>{0, 255}));
}

TEST(NormCodec, DegenerateRange) {
  const std::vector<float> r(32, 1.7f);
  for (const auto spec : {NormQuantSpec::linear(8), NormQuantSpec::log(4)}) {
    const auto q = quantize_norms(r, spec);
    for (const auto c : q.codes) EXPECT_EQ(c, 0);
  }
  const auto back = dequantize_norms(quantize_norms(r, NormQuantSpec::linear(8)),
                                     NormQuantSpec::linear(8));
  for (const float v : back) EXPECT_EQ(v, 1.7f);
}

TEST(NormCodec, HalfStepTieRoundsUp) {
  // t = 7.5 exactly
  const auto q = quantize_norms(std::vector<float>{0, 1, 2}, NormQuantSpec::linear(4));
  EXPECT_EQ(q.codes, (std::vector<std::uint16_t>{0, 8, 15}));
}

TEST(NormCodec, LogSpacing) {
  // In exact arithmetic ln r = (0, 1, 2) sits on a half-step tie at the middle
  // (7.5 -> 8). As float32, e rounds down and ln(e) = 0.99999997, so the
  // middle code is 7 (t = 7.4999998).
  const std::vector<float> r{1.0f, static_cast<float>(std::numbers::e),
                             static_cast<float>(std::numbers::e * std::numbers::e)};
  const auto q = quantize_norms(r, NormQuantSpec::log(4));
  EXPECT_EQ(q.r_min, 0.0f);
  EXPECT_EQ(q.r_max, 2.0f);
  EXPECT_EQ(q.codes, (std::vector<std::uint16_t>{0, 7, 15}));

  // nudged just past the tie
  const std::vector<float> r2{1.0f, std::nextafter(r[1], 3.0f) * 1.0000002f, r[2]};
  EXPECT_EQ(quantize_norms(r2, NormQuantSpec::log(4)).codes[1], 8);
}

TEST(NormCodec, HalfStepBound) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 5.0f);
  for (const auto spec : {NormQuantSpec::linear(8), NormQuantSpec::linear(4),
                          NormQuantSpec::log(4), NormQuantSpec::log(8)}) {
    for (int t = 0; t < 2000; ++t) {
      std::vector<float> r(64);
      for (auto& v : r) v = u(rng);
      const auto q = quantize_norms(r, spec);
      const auto back = dequantize_norms(q, spec);
      const double step = (double{q.r_max} - q.r_min) / ((1U << spec.bits) - 1);
      // float32 rounding of the stored extrema and of the output
      const double slack = 4e-7 * std::max(std::abs(q.r_min), std::abs(q.r_max)) + 1e-12;
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double err = std::abs(to_space(r[i], spec.space) - to_space(back[i], spec.space));
        ASSERT_LE(err, step / 2 + slack) << to_string(spec);
      }
    }
  }
}

TEST(NormCodec, Linear8AbsoluteBound) {
  const auto r = lognormal(64, 9);
  const auto q = quantize_norms(r, NormQuantSpec::linear(8));
  const auto back = dequantize_norms(q, NormQuantSpec::linear(8));
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_LE(std::abs(r[i] - back[i]), (q.r_max - q.r_min) / 510.0 * (1 + 1e-5));
  }
}

TEST(NormCodec, Log4RelativeBound) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = lognormal(64, seed);
    const auto spec = NormQuantSpec::log(4);
    const auto q = quantize_norms(r, spec);
    const auto back = dequantize_norms(q, spec);
    const double half_step = (double{q.r_max} - q.r_min) / 30.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_LE(std::abs(back[i] - r[i]) / r[i], std::expm1(half_step) * (1 + 1e-5) + 1e-6);
    }
  }
}

TEST(NormCodec, LogBeatsLinearOnSkewedNormsAt4Bits) {
  double lin = 0.0, lg = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = lognormal(64, seed);
    lin += mean_rel_error(r, NormQuantSpec::linear(4));
    lg += mean_rel_error(r, NormQuantSpec::log(4));
  }
  EXPECT_LT(lg, lin);
}

TEST(NormCodec, MonotoneCodes) {
  auto r = lognormal(64, 5);
  std::sort(r.begin(), r.end());
  for (const auto spec : {NormQuantSpec::linear(4), NormQuantSpec::log(4)}) {
    const auto q = quantize_norms(r, spec);
    EXPECT_TRUE(std::is_sorted(q.codes.begin(), q.codes.end()));
  }
}

TEST(NormCodec, LogClampsZeros) {
  const auto spec = NormQuantSpec::log(4);
  const auto q = quantize_norms(std::vector<float>{0.0f, 1.0f, 2.0f}, spec);
  EXPECT_TRUE(std::isfinite(q.r_min));
  EXPECT_NEAR(q.r_min, std::log(1e-12), 1e-4);
  const auto back = dequantize_norms(q, spec);
  EXPECT_LT(back[0], 1e-11f);
}

TEST(NormCodec, Errors) {
  EXPECT_THROW(quantize_norms(std::vector<float>{}, NormQuantSpec::linear(8)), Error);
  EXPECT_THROW(quantize_norms(std::vector<float>{1, INFINITY}, NormQuantSpec::linear(8)), Error);
  EXPECT_THROW(quantize_norms(std::vector<float>{1, -1}, NormQuantSpec::linear(8)), Error);
  EXPECT_THROW(quantize_norms(std::vector<float>{1}, NormQuantSpec::fp32()), Error);
  EXPECT_THROW(quantize_norms(std::vector<float>{1}, NormQuantSpec::linear(0)), Error);
  EXPECT_THROW(quantize_norms(std::vector<float>{1}, NormQuantSpec::linear(17)), Error);
  QuantizedNorms bad{0.0f, 1.0f, {16}};
  try {
    dequantize_norms(bad, NormQuantSpec::log(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CorruptData);
  }
}

TEST(NormCodec, Profiles) {
  auto [k, v] = kv_norm_profile(NormProfile::K8V4Log);
  EXPECT_EQ(k, NormQuantSpec::linear(8));
  EXPECT_EQ(v, NormQuantSpec::log(4));
  std::tie(k, v) = kv_norm_profile(NormProfile::Norm8);
  EXPECT_EQ(k, NormQuantSpec::linear(8));
  EXPECT_EQ(v, NormQuantSpec::linear(8));
  std::tie(k, v) = kv_norm_profile(NormProfile::Fp32);
  EXPECT_TRUE(k.fp32_passthrough && v.fp32_passthrough);
  EXPECT_EQ(k.bits_per_element(128), 16.0);
  EXPECT_EQ(parse_norm_profile("k8v4-log"), NormProfile::K8V4Log);
  EXPECT_THROW(parse_norm_profile("k4v4"), Error);
}

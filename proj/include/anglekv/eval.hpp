#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "anglekv/container.hpp"
#include "anglekv/norm_codec.hpp"
#include "anglekv/transform.hpp"

namespace anglekv {

enum class InputDist { Gaussian, Laplacian, Constant, Loaded };

InputDist parse_input_dist(const std::string& name);
std::string to_string(InputDist dist);

// `count` vectors of length d, contiguous. Deterministic in seed. Constant
// vectors are all ones; Loaded is not generated.
std::vector<float> generate_samples(InputDist dist, std::uint32_t d, std::uint32_t count,
                                    std::uint64_t seed);

// Pearson chi-square upper tail, Q(dof/2, stat/2).
double chi_square_p_value(double statistic, double dof);

struct UniformityOptions {
  std::uint64_t seed = kDefaultUniformitySeed;
  std::uint32_t d = 128;
  std::uint32_t num_vectors = 2048;
  std::uint32_t n_bins = 64;
  InputDist dist = InputDist::Gaussian;
  bool rotate = true;
  std::vector<float> loaded;  // used when dist == Loaded

  static constexpr std::uint64_t kDefaultUniformitySeed = 1;
};

struct UniformityReport {
  std::uint64_t seed = 0;
  std::uint32_t d = 0;
  std::uint32_t n_bins = 0;
  std::uint64_t sample_pairs = 0;
  double chi_square = 0.0;
  double p_value = 0.0;
  // max |count - expected| / expected over bins
  double max_bin_deviation = 0.0;
  std::vector<std::uint64_t> counts;
};

/// Rotates the inputs, bins every pair angle and tests the histogram against
/// Uniform[0, 2*pi).
UniformityReport uniformity_test(const UniformityOptions& opts);

struct DistortionPoint {
  std::string method;
  std::uint32_t n = 0;  // 0 for the scalar baseline
  std::string norms;
  double bits_per_element = 0.0;
  double packed_bits_per_element = 0.0;
  double mse = 0.0;
  double relative_mse = 0.0;
  double cosine_mean = 0.0;
};

struct SweepOptions {
  std::vector<std::uint32_t> ns{16, 32, 48, 56, 64, 128, 256};
  std::vector<NormProfile> profiles{NormProfile::Fp32, NormProfile::Norm8, NormProfile::K8V4Log};
  std::vector<unsigned> scalar_bits{3, 4};
  std::uint32_t scalar_group = 4;
  InputDist dist = InputDist::Gaussian;
  std::uint32_t d = 128;
  std::uint32_t samples = 2000;
  std::uint64_t seed = 7;
  Exec exec = Exec::Parallel;
  std::vector<float> loaded;
};

/// Angular points for every (n, profile) plus scalar baseline points. With a
/// K/V profile, the first half of the samples go through the K spec and the
/// second half through the V spec.
std::vector<DistortionPoint> rd_sweep(const SweepOptions& opts);

// Expected relative MSE of uniform angular quantization with exact norms,
// (1/3)(pi/n)^2.
double angular_mse_closed_form(std::uint32_t n);

/// Symmetric max-abs scalar quantizer per group of `group` rotated
/// coordinates ("TQ-style" comparison baseline).
std::vector<float> scalar_baseline(std::span<const float> x, unsigned bits, std::uint32_t group,
                                   const SignDiagonal& diag);

void write_csv(std::ostream& out, const std::vector<DistortionPoint>& points);
void write_csv(std::ostream& out, const std::vector<UniformityReport>& reports);

}  // namespace anglekv

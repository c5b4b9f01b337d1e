#include "anglekv/norm_codec.hpp"

#include <algorithm>
#include <cmath>

#include "anglekv/error.hpp"

namespace anglekv {

void NormQuantSpec::validate() const {
  if (fp32_passthrough) return;
  if (bits < 1 || bits > 16) {
    fail(ErrorKind::InvalidArgument,
         "norm bits " + std::to_string(bits) + " outside [1, 16]");
  }
}

double NormQuantSpec::bits_per_element(std::size_t head_dim) const {
  if (fp32_passthrough) return 16.0;
  return bits / 2.0 + 64.0 / static_cast<double>(head_dim);
}

std::string to_string(const NormQuantSpec& spec) {
  if (spec.fp32_passthrough) return "fp32";
  return std::to_string(spec.bits) + (spec.space == NormSpace::Log ? "-log" : "-linear");
}

namespace {

double to_space(float r, NormSpace space) {
  if (space == NormSpace::Linear) return r;
  return std::log(std::max(static_cast<double>(r), kLogEpsilon));
}

}  // namespace

QuantizedNorms quantize_norms(std::span<const float> r, const NormQuantSpec& spec) {
  spec.validate();
  if (spec.fp32_passthrough) {
    fail(ErrorKind::InvalidArgument, "fp32 passthrough norms are not quantized");
  }
  if (r.empty()) fail(ErrorKind::InvalidArgument, "empty norm sequence");

  std::vector<double> v(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(r[i]) || r[i] < 0.0f) {
      fail(ErrorKind::NonFinite, "norm " + std::to_string(i) + " is negative or not finite");
    }
    v[i] = to_space(r[i], spec.space);
  }
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());

  QuantizedNorms q;
  q.r_min = static_cast<float>(*lo_it);
  q.r_max = static_cast<float>(*hi_it);
  q.codes.assign(r.size(), 0);

  const double lo = q.r_min;
  const double range = static_cast<double>(q.r_max) - lo;
  if (!(range > 0.0)) return q;

  const double levels = static_cast<double>((1U << spec.bits) - 1U);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = std::floor((v[i] - lo) / range * levels + 0.5);
    q.codes[i] = static_cast<std::uint16_t>(std::clamp(t, 0.0, levels));
  }
  return q;
}

std::vector<float> dequantize_norms(const QuantizedNorms& q, const NormQuantSpec& spec) {
  spec.validate();
  if (spec.fp32_passthrough) {
    fail(ErrorKind::InvalidArgument, "fp32 passthrough norms are not quantized");
  }
  const std::uint32_t max_code = (1U << spec.bits) - 1U;
  const double lo = q.r_min;
  const double range = static_cast<double>(q.r_max) - lo;
  std::vector<float> out(q.codes.size());
  for (std::size_t i = 0; i < q.codes.size(); ++i) {
    if (q.codes[i] > max_code) {
      fail(ErrorKind::CorruptData, "norm code " + std::to_string(q.codes[i]) +
                                       " exceeds " + std::to_string(spec.bits) + " bits");
    }
    double v = lo;
    if (range > 0.0) v = lo + static_cast<double>(q.codes[i]) / max_code * range;
    out[i] = static_cast<float>(spec.space == NormSpace::Log ? std::exp(v) : v);
  }
  return out;
}

NormProfile parse_norm_profile(const std::string& name) {
  if (name == "fp32") return NormProfile::Fp32;
  if (name == "norm8") return NormProfile::Norm8;
  if (name == "k8v4-log" || name == "k8v4_log") return NormProfile::K8V4Log;
  fail(ErrorKind::InvalidArgument, "unknown norm profile '" + name + "'");
}

std::string to_string(NormProfile profile) {
  switch (profile) {
    case NormProfile::Fp32: return "fp32";
    case NormProfile::Norm8: return "norm8";
    case NormProfile::K8V4Log: return "k8v4-log";
  }
  return "?";
}

std::pair<NormQuantSpec, NormQuantSpec> kv_norm_profile(NormProfile profile) {
  switch (profile) {
    case NormProfile::Fp32: return {NormQuantSpec::fp32(), NormQuantSpec::fp32()};
    case NormProfile::Norm8: return {NormQuantSpec::linear(8), NormQuantSpec::linear(8)};
    case NormProfile::K8V4Log: return {NormQuantSpec::linear(8), NormQuantSpec::log(4)};
  }
  fail(ErrorKind::InvalidArgument, "unknown norm profile");
}

}  // namespace anglekv

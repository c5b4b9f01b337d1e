#include "anglekv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include <boost/math/special_functions/gamma.hpp>

#include "anglekv/angle_codec.hpp"
#include "anglekv/error.hpp"
#include "anglekv/kernels.hpp"
#include "anglekv/layer_policy.hpp"

namespace anglekv {

InputDist parse_input_dist(const std::string& name) {
  if (name == "gaussian") return InputDist::Gaussian;
  if (name == "laplacian") return InputDist::Laplacian;
  if (name == "constant") return InputDist::Constant;
  if (name == "loaded" || name == "loaded_sample") return InputDist::Loaded;
  fail(ErrorKind::InvalidArgument, "unknown input distribution '" + name + "'");
}

std::string to_string(InputDist dist) {
  switch (dist) {
    case InputDist::Gaussian: return "gaussian";
    case InputDist::Laplacian: return "laplacian";
    case InputDist::Constant: return "constant";
    case InputDist::Loaded: return "loaded";
  }
  return "?";
}

std::vector<float> generate_samples(InputDist dist, std::uint32_t d, std::uint32_t count,
                                    std::uint64_t seed) {
  std::vector<float> out(std::size_t{d} * count);
  // decorrelate from the sign-diagonal stream, which uses the same seed
  std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ULL);
  switch (dist) {
    case InputDist::Gaussian: {
      std::normal_distribution<float> g(0.0f, 1.0f);
      for (auto& v : out) v = g(rng);
      break;
    }
    case InputDist::Laplacian: {
      std::exponential_distribution<float> e(1.0f);
      std::bernoulli_distribution coin(0.5);
      for (auto& v : out) v = coin(rng) ? e(rng) : -e(rng);
      break;
    }
    case InputDist::Constant: std::fill(out.begin(), out.end(), 1.0f); break;
    case InputDist::Loaded:
      fail(ErrorKind::InvalidArgument, "loaded samples come from a tensor dump");
  }
  return out;
}

double chi_square_p_value(double statistic, double dof) {
  if (dof <= 0) fail(ErrorKind::InvalidArgument, "chi-square needs positive degrees of freedom");
  if (statistic <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

namespace {

std::vector<float> resolve_samples(InputDist dist, std::uint32_t d, std::uint32_t count,
                                   std::uint64_t seed, const std::vector<float>& loaded) {
  if (dist != InputDist::Loaded) return generate_samples(dist, d, count, seed);
  if (loaded.empty() || loaded.size() % d != 0) {
    fail(ErrorKind::InvalidArgument, "loaded samples must hold a whole number of vectors");
  }
  return loaded;
}

}  // namespace

UniformityReport uniformity_test(const UniformityOptions& opts) {
  check_head_dim(opts.d);
  if (opts.n_bins < 2) fail(ErrorKind::InvalidArgument, "need at least two bins");
  auto samples = resolve_samples(opts.dist, opts.d, opts.num_vectors, opts.seed, opts.loaded);
  const std::size_t vectors = samples.size() / opts.d;
  const std::uint64_t pairs = vectors * (opts.d / 2);
  if (pairs < 10ULL * opts.n_bins) {
    fail(ErrorKind::InvalidArgument, std::to_string(pairs) + " pairs is too few for " +
                                         std::to_string(opts.n_bins) + " bins");
  }

  const auto diag = SignDiagonal::sample(opts.seed, opts.d);
  UniformityReport rep;
  rep.seed = opts.seed;
  rep.d = opts.d;
  rep.n_bins = opts.n_bins;
  rep.sample_pairs = pairs;
  rep.counts.assign(opts.n_bins, 0);

  const double scale = opts.n_bins / (2.0 * std::numbers::pi);
  for (std::size_t v = 0; v < vectors; ++v) {
    std::span<float> x(samples.data() + v * opts.d, opts.d);
    if (opts.rotate) rotate_forward_inplace(x, diag);
    for (std::size_t i = 0; i < opts.d / 2; ++i) {
      const double theta = pair_angle(x[2 * i], x[2 * i + 1]);
      const auto bin = std::min<std::uint64_t>(static_cast<std::uint64_t>(theta * scale),
                                               opts.n_bins - 1);
      ++rep.counts[bin];
    }
  }

  const double expected = static_cast<double>(pairs) / opts.n_bins;
  for (const auto c : rep.counts) {
    const double diff = static_cast<double>(c) - expected;
    rep.chi_square += diff * diff / expected;
    rep.max_bin_deviation = std::max(rep.max_bin_deviation, std::abs(diff) / expected);
  }
  rep.p_value = chi_square_p_value(rep.chi_square, opts.n_bins - 1.0);
  return rep;
}

double angular_mse_closed_form(std::uint32_t n) {
  const double half_bin = std::numbers::pi / n;
  return half_bin * half_bin / 3.0;
}

std::vector<float> scalar_baseline(std::span<const float> x, unsigned bits, std::uint32_t group,
                                   const SignDiagonal& diag) {
  if (bits < 2 || bits > 16) fail(ErrorKind::InvalidArgument, "scalar bits outside [2, 16]");
  if (group == 0 || x.size() % group != 0) {
    fail(ErrorKind::InvalidArgument, "group size " + std::to_string(group) +
                                         " does not divide d = " + std::to_string(x.size()));
  }
  auto y = rotate_forward(x, diag);
  const double qmax = static_cast<double>((1U << (bits - 1)) - 1U);
  for (std::size_t g = 0; g < y.size(); g += group) {
    double m = 0.0;
    for (std::size_t i = g; i < g + group; ++i) m = std::max(m, std::abs(double{y[i]}));
    for (std::size_t i = g; i < g + group; ++i) {
      if (m == 0.0) {
        y[i] = 0.0f;
        continue;
      }
      const double q = std::clamp(std::round(y[i] / m * qmax), -qmax, qmax);
      y[i] = static_cast<float>(m * (q / qmax));
    }
  }
  rotate_inverse_inplace(y, diag);
  return y;
}

namespace {

struct Accum {
  double err = 0.0;
  double energy = 0.0;
  double cosine = 0.0;
  std::size_t vectors = 0;
  std::size_t elements = 0;

  void add(std::span<const float> x, std::span<const float> xh) {
    double e = 0.0, xx = 0.0, hh = 0.0, xh_dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a = x[i], b = xh[i];
      e += (a - b) * (a - b);
      xx += a * a;
      hh += b * b;
      xh_dot += a * b;
    }
    err += e;
    energy += xx;
    cosine += (xx > 0 && hh > 0) ? xh_dot / std::sqrt(xx * hh) : 1.0;
    ++vectors;
    elements += x.size();
  }

  void finish(DistortionPoint& p) const {
    p.mse = err / static_cast<double>(elements);
    p.relative_mse = energy > 0 ? err / energy : 0.0;
    p.cosine_mean = cosine / static_cast<double>(vectors);
  }
};

}  // namespace

std::vector<DistortionPoint> rd_sweep(const SweepOptions& opts) {
  check_head_dim(opts.d);
  const auto samples = resolve_samples(opts.dist, opts.d, opts.samples, opts.seed, opts.loaded);
  const std::size_t count = samples.size() / opts.d;
  if (count < 2) fail(ErrorKind::InvalidArgument, "sweep needs at least two sample vectors");
  const auto diag = SignDiagonal::sample(opts.seed, opts.d);
  const std::size_t half = (count / 2) * opts.d;
  const ModelShape shape{1, opts.d, 1};

  std::vector<DistortionPoint> points;
  std::vector<float> recon(samples.size());
  for (const auto profile : opts.profiles) {
    const auto [k_spec, v_spec] = kv_norm_profile(profile);
    for (const auto n : opts.ns) {
      const RecordLayout k_layout(n, k_spec, opts.d);
      const RecordLayout v_layout(n, v_spec, opts.d);
      const std::span<const float> in(samples);
      const std::span<float> out(recon);
      const auto run = opts.exec == Exec::Parallel ? kernels::roundtrip_omp
                                                   : kernels::roundtrip_serial;
      run(in.first(half), out.first(half), k_layout, diag);
      run(in.subspan(half), out.subspan(half), v_layout, diag);

      auto cfg = LayerQuantConfig::uniform(1, {n, n});
      cfg.set_norm_profile(profile);
      const auto rate = total_bits(cfg, shape);

      DistortionPoint p;
      p.method = "angle-n" + std::to_string(n);
      p.n = n;
      p.norms = to_string(profile);
      p.bits_per_element = rate.avg_total_bits;
      p.packed_bits_per_element = rate.packed_bits_per_element;
      Accum acc;
      for (std::size_t v = 0; v < count; ++v) {
        acc.add(in.subspan(v * opts.d, opts.d), std::span<const float>(recon).subspan(v * opts.d, opts.d));
      }
      acc.finish(p);
      points.push_back(p);
    }
  }

  for (const auto bits : opts.scalar_bits) {
    DistortionPoint p;
    p.method = "tq-style-sym" + std::to_string(bits) + "-g" + std::to_string(opts.scalar_group);
    p.norms = "none";
    p.bits_per_element = bits;
    p.packed_bits_per_element = bits + 32.0 / opts.scalar_group;
    Accum acc;
    for (std::size_t v = 0; v < count; ++v) {
      const std::span<const float> x(samples.data() + v * opts.d, opts.d);
      acc.add(x, scalar_baseline(x, bits, opts.scalar_group, diag));
    }
    acc.finish(p);
    points.push_back(p);
  }
  return points;
}

void write_csv(std::ostream& out, const std::vector<DistortionPoint>& points) {
  out << "method,n,norms,bits_per_element,packed_bits_per_element,mse,relative_mse,cosine_mean\n";
  const auto old = out.precision(10);
  for (const auto& p : points) {
    out << p.method << ',' << p.n << ',' << p.norms << ',' << p.bits_per_element << ','
        << p.packed_bits_per_element << ',' << p.mse << ',' << p.relative_mse << ','
        << p.cosine_mean << '\n';
  }
  out.precision(old);
}

void write_csv(std::ostream& out, const std::vector<UniformityReport>& reports) {
  out << "seed,d,n_bins,sample_pairs,chi_square,p_value,max_bin_deviation\n";
  const auto old = out.precision(10);
  for (const auto& r : reports) {
    out << r.seed << ',' << r.d << ',' << r.n_bins << ',' << r.sample_pairs << ','
        << r.chi_square << ',' << r.p_value << ',' << r.max_bin_deviation << '\n';
  }
  out.precision(old);
}

}  // namespace anglekv

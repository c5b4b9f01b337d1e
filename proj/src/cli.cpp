#include "anglekv/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "anglekv/angle_codec.hpp"
#include "anglekv/container.hpp"
#include "anglekv/error.hpp"
#include "anglekv/eval.hpp"
#include "anglekv/layer_policy.hpp"
#include "anglekv/tensor_io.hpp"

namespace anglekv::cli {
namespace {

struct Options {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string input;
  std::string output;
  std::string csv;
  std::string norms;
  std::string dist = "gaussian";
  std::uint32_t samples = 0;
  std::uint32_t dims = 128;
  std::uint32_t layers = 0;
  std::uint32_t kv_heads = 1;
  std::uint32_t group_size = 0;
};

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("ANGLEKV_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 0);
    if (used != std::strlen(s)) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, std::string("ANGLEKV_SEED is not an integer: ") + s);
  }
}

// --seed, then ANGLEKV_SEED, then `fallback`.
std::uint64_t resolve_seed(const Options& o, std::uint64_t fallback) {
  if (o.seed) return *o.seed;
  if (const auto e = env_seed()) return *e;
  return fallback;
}

struct ResolvedConfig {
  std::string name;
  ModelShape shape;
  LayerQuantConfig config;
};

ResolvedConfig resolve_config(const Options& o) {
  ResolvedConfig r;
  if (!o.preset.empty()) {
    const Model m = parse_model(o.preset);
    const auto norms = o.norms.empty() ? NormProfile::K8V4Log : parse_norm_profile(o.norms);
    auto p = preset(m, norms);
    r = {model_name(m), p.shape, p.config};
    r.config.seed = resolve_seed(o, kDefaultSeed);
  } else if (!o.config.empty()) {
    auto doc = load_config_file(o.config);
    r = {doc.label.empty() ? o.config : doc.label, doc.shape, doc.config};
    if (!o.norms.empty()) r.config.set_norm_profile(parse_norm_profile(o.norms));
    r.config.seed = resolve_seed(o, doc.config.seed);
  } else {
    throw CLI::ValidationError("--preset/--config", "one of --preset or --config is required");
  }
  return r;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

// Half-up rounding to two decimals on the printed value.
std::string two_decimals(double v) { return fixed(std::floor(v * 100.0 + 0.5 + 1e-9) / 100.0, 2); }

int cmd_encode(const Options& o, std::ostream& out) {
  auto rc = resolve_config(o);
  const auto tensors = read_tensor_dump(o.input);
  // head count comes from the tensors; the preset value is informational
  rc.shape.kv_heads = tensors.heads();
  const auto blob = encode_cache(tensors, rc.config, rc.shape);
  write_file_bytes(o.output, blob.to_bytes());
  const auto m = measured_rate(blob);
  out << "wrote " << o.output << ": " << tensors.vector_count() << " vectors, "
      << m.payload_bits / 8 << " payload bytes, " << fixed(m.bits_per_element, 4)
      << " bits/element\n";
  return kOk;
}

int cmd_decode(const Options& o, std::ostream& out) {
  const auto blob = CacheBlob::from_bytes(read_file_bytes(o.input));
  if (o.seed) check_seed(blob, *o.seed);
  const auto tensors = decode_cache(blob);
  write_tensor_dump(o.output, tensors);
  out << "wrote " << o.output << " (" << tensors.layers() << " layers x " << tensors.heads()
      << " heads x " << tensors.tokens() << " tokens x d=" << tensors.head_dim() << ")\n";
  return kOk;
}

void print_rate(std::ostream& out, const RateReport& r) {
  out << "  angle bits      " << fixed(r.avg_angle_bits, 4) << "  (" << two_decimals(r.avg_angle_bits)
      << ")\n"
      << "  K total bits    " << fixed(r.k_total_bits, 4) << "\n"
      << "  V total bits    " << fixed(r.v_total_bits, 4) << "\n"
      << "  total bits      " << fixed(r.avg_total_bits, 4) << "  (" << two_decimals(r.avg_total_bits)
      << ")\n"
      << "  packed angle    " << fixed(r.packed_angle_bits, 4) << "\n"
      << "  packed total    " << fixed(r.packed_bits_per_element, 4) << "\n";
}

int cmd_rate(const Options& o, std::ostream& out) {
  const auto rc = resolve_config(o);
  out << "config " << rc.name << ": " << rc.shape.num_layers << " layers, d=" << rc.shape.head_dim
      << ", K norms " << to_string(rc.config.k_norm) << ", V norms " << to_string(rc.config.v_norm)
      << "\n";
  print_rate(out, total_bits(rc.config, rc.shape));
  out << "norm profiles:\n";
  for (const auto p : {NormProfile::Fp32, NormProfile::Norm8, NormProfile::K8V4Log}) {
    auto cfg = rc.config;
    cfg.set_norm_profile(p);
    const auto r = total_bits(cfg, rc.shape);
    out << "  " << std::left << std::setw(10) << to_string(p) << std::right << " total "
        << fixed(r.avg_total_bits, 4) << "  packed " << fixed(r.packed_bits_per_element, 4) << "\n";
  }
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const std::uint64_t base = resolve_seed(o, UniformityOptions::kDefaultUniformitySeed);
  const std::uint32_t d = o.dims;
  const std::uint32_t vectors = o.samples ? o.samples : (1U << 18) / d;
  bool ok = true;
  auto line = [&](bool pass, const std::string& what) {
    out << (pass ? "PASS " : "FAIL ") << what << "\n";
    ok = ok && pass;
  };

  std::vector<UniformityReport> reports;
  int passing = 0;
  for (std::uint64_t s = base; s < base + 10; ++s) {
    UniformityOptions u;
    u.seed = s;
    u.d = d;
    u.num_vectors = vectors;
    u.dist = parse_input_dist(o.dist);
    if (u.dist == InputDist::Loaded) {
      const auto t = read_tensor_dump(o.input);
      u.loaded = t.data();
      u.d = t.head_dim();
    }
    reports.push_back(uniformity_test(u));
    passing += reports.back().p_value > 1e-3;
    out << "  seed " << s << ": chi2 " << fixed(reports.back().chi_square, 2) << "  p "
        << std::setprecision(4) << reports.back().p_value << "\n";
  }
  line(passing >= 9, "angle uniformity: " + std::to_string(passing) + "/10 seeds with p > 0.001");

  UniformityOptions control;
  control.d = d;
  control.num_vectors = vectors;
  control.dist = InputDist::Constant;
  control.rotate = false;
  const auto c = uniformity_test(control);
  reports.push_back(c);
  line(c.p_value < 1e-6, "constant-vector control rejected");

  // transform self-inverse and norm preservation
  std::mt19937_64 rng(base);
  std::normal_distribution<float> g;
  double worst = 0.0;
  for (std::uint32_t dim = 2; dim <= 128; dim *= 2) {
    std::vector<float> x(dim);
    for (auto& v : x) v = g(rng);
    const auto twice = fwht(fwht(x));
    double e = 0, n = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      e += (twice[i] - x[i]) * (twice[i] - x[i]);
      n += x[i] * x[i];
    }
    worst = std::max(worst, std::sqrt(e / n));
  }
  line(worst <= 1e-5, "fwht self-inverse, worst relative error " + fixed(worst * 1e6, 3) + "e-6");

  // round trip bound on the rotated domain
  const auto diag = SignDiagonal::sample(base, d);
  const AngleCodebook book(64);
  bool bound_ok = true;
  for (int t = 0; t < 200; ++t) {
    std::vector<float> x(d);
    for (auto& v : x) v = g(rng);
    const auto enc = encode(x, diag, book);
    const auto xh = decode(enc, diag);
    double err = 0, rr = 0;
    for (std::size_t i = 0; i < d; ++i) err += (x[i] - xh[i]) * (x[i] - xh[i]);
    for (const auto& p : enc.pairs) rr += double{p.r} * p.r;
    bound_ok = bound_ok && std::sqrt(err) <= 2 * std::sin(std::numbers::pi / 128) * std::sqrt(rr) * (1 + 1e-5);
  }
  line(bound_ok, "angular error bound at n=64");

  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    if (!f) fail(ErrorKind::Io, "cannot write " + o.csv);
    write_csv(f, reports);
  }
  return ok ? kOk : kValidation;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  SweepOptions s;
  s.d = o.dims;
  if (o.samples) s.samples = o.samples;
  s.seed = resolve_seed(o, s.seed);
  s.dist = parse_input_dist(o.dist);
  if (!o.input.empty()) {
    const auto t = read_tensor_dump(o.input);
    s.dist = InputDist::Loaded;
    s.loaded = t.data();
    s.d = t.head_dim();
  }
  if (!o.norms.empty()) s.profiles = {parse_norm_profile(o.norms)};
  const auto points = rd_sweep(s);
  out << std::left << std::setw(22) << "method" << std::setw(10) << "norms" << std::right
      << std::setw(10) << "bits" << std::setw(10) << "packed" << std::setw(14) << "rel_mse"
      << std::setw(10) << "cosine" << "\n";
  for (const auto& p : points) {
    out << std::left << std::setw(22) << p.method << std::setw(10) << p.norms << std::right
        << std::setw(10) << fixed(p.bits_per_element, 3) << std::setw(10)
        << fixed(p.packed_bits_per_element, 3) << std::setw(14) << std::scientific
        << std::setprecision(4) << p.relative_mse << std::defaultfloat << std::setw(10)
        << fixed(p.cosine_mean, 5) << "\n";
  }
  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    if (!f) fail(ErrorKind::Io, "cannot write " + o.csv);
    write_csv(f, points);
  }
  return kOk;
}

int cmd_plan(const Options& o, std::ostream& out) {
  if (o.layers == 0) throw CLI::ValidationError("--layers", "must be positive");
  const ModelShape shape{o.layers, o.dims, o.kv_heads};
  const auto plans = o.group_size ? group_sweep_plan(shape, o.group_size) : boost_candidates(shape);
  const std::string dir = o.output.empty() ? "." : o.output;
  std::filesystem::create_directories(dir);
  const auto norms = o.norms.empty() ? NormProfile::Fp32 : parse_norm_profile(o.norms);
  const auto seed = resolve_seed(o, kDefaultSeed);
  for (const auto& p : plans) {
    ConfigDocument doc{shape, p.config, p.label};
    doc.config.set_norm_profile(norms);
    doc.config.seed = seed;
    const auto path = (std::filesystem::path(dir) / (p.label + ".json")).string();
    save_config_file(path, doc);
    out << path << "  angle bits " << fixed(average_angle_bits(doc.config), 4) << "\n";
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"anglekv: angular KV-cache quantization codec"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    auto* p = sub->add_option("--preset", o.preset, "built-in model preset");
    auto* c = sub->add_option("--config", o.config, "config JSON file");
    p->excludes(c);
    sub->add_option("--norms", o.norms, "norm profile: fp32, norm8, k8v4-log");
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "rotation seed (falls back to ANGLEKV_SEED)");
  };

  auto* enc = app.add_subcommand("encode", "tensor dump -> cache blob");
  add_config(enc);
  add_seed(enc);
  enc->add_option("--input", o.input, "tensor dump")->required();
  enc->add_option("--output", o.output, "blob path")->required();

  auto* dec = app.add_subcommand("decode", "cache blob -> tensor dump");
  add_seed(dec);
  dec->add_option("--input", o.input, "blob path")->required();
  dec->add_option("--output", o.output, "tensor dump")->required();

  auto* rate = app.add_subcommand("rate", "print rate accounting for a config");
  add_config(rate);
  add_seed(rate);

  auto* ver = app.add_subcommand("verify", "statistical and invariant checks");
  add_seed(ver);
  ver->add_option("--samples", o.samples, "vectors per seed");
  ver->add_option("--dims", o.dims, "head dimension");
  ver->add_option("--csv", o.csv, "write uniformity rows");
  ver->add_option("--dist", o.dist, "gaussian, laplacian or loaded");
  ver->add_option("--input", o.input, "tensor dump for --dist loaded");

  auto* sw = app.add_subcommand("sweep", "synthetic rate-distortion sweep");
  add_seed(sw);
  sw->add_option("--samples", o.samples, "sample vectors");
  sw->add_option("--dims", o.dims, "head dimension");
  sw->add_option("--csv", o.csv, "write distortion rows");
  sw->add_option("--dist", o.dist, "gaussian or laplacian");
  sw->add_option("--input", o.input, "tensor dump to sweep instead of synthetic data");
  sw->add_option("--norms", o.norms, "restrict to one norm profile");

  auto* plan = app.add_subcommand("plan", "write early-boost or group-sweep configs");
  add_seed(plan);
  plan->add_option("--layers", o.layers, "number of layers")->required();
  plan->add_option("--dims", o.dims, "head dimension");
  plan->add_option("--kv-heads", o.kv_heads, "kv heads (informational)");
  plan->add_option("--group-size", o.group_size, "emit a group sweep instead");
  plan->add_option("--output", o.output, "output directory");
  plan->add_option("--norms", o.norms, "norm profile for emitted configs");

  try {
    app.parse(argc, argv);
    if (enc->parsed()) return cmd_encode(o, out);
    if (dec->parsed()) return cmd_decode(o, out);
    if (rate->parsed()) return cmd_rate(o, out);
    if (ver->parsed()) return cmd_verify(o, out);
    if (sw->parsed()) return cmd_sweep(o, out);
    if (plan->parsed()) return cmd_plan(o, out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Io: return kIo;
      case ErrorKind::Format:
      case ErrorKind::CorruptData: return kFormat;
      default: return kValidation;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}

}  // namespace anglekv::cli

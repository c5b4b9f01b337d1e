#include "anglekv/layer_policy.hpp"

#include <algorithm>
#include <cmath>

#include "anglekv/angle_codec.hpp"
#include "anglekv/error.hpp"

namespace anglekv {

void ModelShape::validate() const {
  if (num_layers == 0) fail(ErrorKind::InvalidArgument, "model has no layers");
  if (kv_heads == 0) fail(ErrorKind::InvalidArgument, "model has no kv heads");
  check_head_dim(head_dim);
}

LayerQuantConfig LayerQuantConfig::uniform(std::uint32_t num_layers, LayerCodebooks books) {
  LayerQuantConfig c;
  c.layers.assign(num_layers, books);
  return c;
}

void LayerQuantConfig::validate() const {
  if (layers.empty()) fail(ErrorKind::InvalidArgument, "config has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    // AngleCodebook rejects out-of-range sizes
    try {
      AngleCodebook{layers[l].nk};
      AngleCodebook{layers[l].nv};
    } catch (const Error& e) {
      fail(ErrorKind::InvalidArgument, "layer " + std::to_string(l) + ": " + e.what());
    }
  }
  k_norm.validate();
  v_norm.validate();
}

void LayerQuantConfig::check_against(const ModelShape& shape) const {
  validate();
  shape.validate();
  if (layers.size() != shape.num_layers) {
    fail(ErrorKind::DimensionMismatch, "config has " + std::to_string(layers.size()) +
                                           " layers, model has " +
                                           std::to_string(shape.num_layers));
  }
}

void LayerQuantConfig::set_norm_profile(NormProfile profile) {
  std::tie(k_norm, v_norm) = kv_norm_profile(profile);
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_norm(std::vector<std::uint8_t>& out, const NormQuantSpec& s) {
  std::uint8_t mode = 0;
  if (!s.fp32_passthrough) mode = s.space == NormSpace::Log ? 2 : 1;
  out.push_back(mode);
  out.push_back(static_cast<std::uint8_t>(s.fp32_passthrough ? 0 : s.bits));
}

}  // namespace

std::vector<std::uint8_t> LayerQuantConfig::canonical_bytes() const {
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    put_u32(out, l.nk);
    put_u32(out, l.nv);
  }
  put_norm(out, k_norm);
  put_norm(out, v_norm);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
  return out;
}

std::uint64_t LayerQuantConfig::hash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const std::uint8_t b : canonical_bytes()) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

double average_angle_bits(const LayerQuantConfig& config) {
  config.validate();
  double sum = 0.0;
  for (const auto& l : config.layers) {
    sum += (std::log2(static_cast<double>(l.nk)) + std::log2(static_cast<double>(l.nv))) / 4.0;
  }
  return sum / static_cast<double>(config.layers.size());
}

std::uint64_t record_bits(std::uint32_t n, const NormQuantSpec& norm, std::uint32_t head_dim) {
  const std::uint64_t pairs = head_dim / 2;
  const std::uint64_t norm_bits = norm.fp32_passthrough ? 32 * pairs : 64 + pairs * norm.bits;
  const std::uint64_t bits = norm_bits + pairs * AngleCodebook(n).index_bits();
  return (bits + 7) / 8 * 8;
}

RateReport total_bits(const LayerQuantConfig& config, const ModelShape& shape) {
  config.check_against(shape);
  const double d = shape.head_dim;
  const double layers = static_cast<double>(config.layers.size());

  RateReport r;
  double packed = 0.0;
  double packed_angle = 0.0;
  for (const auto& l : config.layers) {
    r.k_angle_bits += std::log2(static_cast<double>(l.nk)) / 2.0;
    r.v_angle_bits += std::log2(static_cast<double>(l.nv)) / 2.0;
    packed += static_cast<double>(record_bits(l.nk, config.k_norm, shape.head_dim) +
                                  record_bits(l.nv, config.v_norm, shape.head_dim)) /
              (2.0 * d);
    packed_angle += (AngleCodebook(l.nk).index_bits() + AngleCodebook(l.nv).index_bits()) / 4.0;
  }
  r.k_angle_bits /= layers;
  r.v_angle_bits /= layers;
  r.avg_angle_bits = (r.k_angle_bits + r.v_angle_bits) / 2.0;
  // Both sides carry the layer-averaged angle rate; only the norm term is per side.
  r.k_total_bits = r.avg_angle_bits + config.k_norm.bits_per_element(shape.head_dim);
  r.v_total_bits = r.avg_angle_bits + config.v_norm.bits_per_element(shape.head_dim);
  r.avg_total_bits = (r.k_total_bits + r.v_total_bits) / 2.0;
  r.packed_angle_bits = packed_angle / layers;
  r.packed_bits_per_element = packed / layers;
  return r;
}

std::vector<Model> all_models() {
  return {Model::TinyLlama, Model::Mistral7B, Model::SmolLM2,   Model::Phi15,
          Model::StableLM2, Model::StarCoder2, Model::OLMo};
}

std::string model_name(Model model) {
  switch (model) {
    case Model::TinyLlama: return "tinyllama-1.1b";
    case Model::Mistral7B: return "mistral-7b";
    case Model::SmolLM2: return "smollm2-1.7b";
    case Model::Phi15: return "phi-1.5";
    case Model::StableLM2: return "stablelm-2-1.6b";
    case Model::StarCoder2: return "starcoder2-3b";
    case Model::OLMo: return "olmo-1b";
  }
  return "?";
}

Model parse_model(const std::string& name) {
  for (const Model m : all_models()) {
    const std::string full = model_name(m);
    if (name == full || name == full.substr(0, full.rfind('-'))) return m;
  }
  fail(ErrorKind::InvalidArgument, "unknown preset '" + name + "'");
}

LayerQuantConfig boosted_config(std::uint32_t num_layers, const std::vector<std::uint32_t>& boosted,
                                LayerCodebooks boost) {
  auto c = LayerQuantConfig::uniform(num_layers);
  for (const auto l : boosted) {
    if (l >= num_layers) {
      fail(ErrorKind::InvalidArgument, "boosted layer " + std::to_string(l) +
                                           " outside a " + std::to_string(num_layers) +
                                           "-layer model");
    }
    c.layers[l] = boost;
  }
  return c;
}

namespace {

std::vector<std::uint32_t> layer_range(std::uint32_t first, std::uint32_t last) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t l = first; l < last; ++l) out.push_back(l);
  return out;
}

std::string boost_tag(LayerCodebooks b) {
  return "K" + std::to_string(b.nk) + "V" + std::to_string(b.nv);
}

}  // namespace

LayerQuantConfig early_boost_config(std::uint32_t num_layers, std::uint32_t depth,
                                    LayerCodebooks boost) {
  return boosted_config(num_layers, layer_range(0, std::min(depth, num_layers)), boost);
}

Preset preset(Model model, NormProfile norms, std::uint64_t seed) {
  struct Row {
    ModelShape shape;
    std::vector<std::uint32_t> boosted;
    LayerCodebooks boost;
  };
  Row row;
  switch (model) {
    case Model::TinyLlama: row = {{22, 64, 4}, layer_range(0, 4), {128, 256}}; break;
    case Model::Mistral7B: row = {{32, 128, 8}, layer_range(0, 4), {256, 128}}; break;
    case Model::SmolLM2: row = {{24, 64, 32}, layer_range(0, 20), {256, 128}}; break;
    case Model::Phi15: {
      auto layers = layer_range(0, 8);
      const auto tail = layer_range(16, 24);
      layers.insert(layers.end(), tail.begin(), tail.end());
      row = {{24, 64, 32}, layers, {256, 128}};
      break;
    }
    case Model::StableLM2: row = {{32, 64, 32}, layer_range(0, 24), {256, 128}}; break;
    case Model::StarCoder2: row = {{40, 64, 2}, layer_range(0, 16), {256, 128}}; break;
    case Model::OLMo: row = {{32, 64, 16}, layer_range(0, 4), {256, 64}}; break;
  }
  Preset p{model, row.shape, boosted_config(row.shape.num_layers, row.boosted, row.boost)};
  p.config.set_norm_profile(norms);
  p.config.seed = seed;
  return p;
}

std::vector<PlannedConfig> boost_candidates(const ModelShape& shape) {
  shape.validate();
  std::vector<PlannedConfig> out;
  std::uint32_t last_depth = 0;
  for (const std::uint32_t want : {4U, 8U, 16U}) {
    const std::uint32_t depth = std::min(want, shape.num_layers);
    if (depth == last_depth) break;
    last_depth = depth;
    for (const LayerCodebooks boost : {kKeyBoost, kValueBoost}) {
      out.push_back({"E" + std::to_string(depth) + "-" + boost_tag(boost), depth, boost,
                     early_boost_config(shape.num_layers, depth, boost)});
    }
  }
  out.push_back({"uniform-" + boost_tag(kBaselineCodebooks), 0, kBaselineCodebooks,
                 LayerQuantConfig::uniform(shape.num_layers)});
  return out;
}

std::vector<PlannedConfig> group_sweep_plan(const ModelShape& shape, std::uint32_t group_size,
                                            LayerCodebooks boost) {
  shape.validate();
  if (group_size == 0) fail(ErrorKind::InvalidArgument, "group size must be positive");
  std::vector<PlannedConfig> out;
  for (std::uint32_t first = 0, g = 0; first < shape.num_layers; first += group_size, ++g) {
    const std::uint32_t last = std::min(first + group_size, shape.num_layers);
    out.push_back({"G" + std::to_string(g), last - first, boost,
                   boosted_config(shape.num_layers, layer_range(first, last), boost)});
  }
  return out;
}

std::optional<std::uint32_t> next_boost_depth(std::uint32_t depth, std::uint32_t num_layers) {
  if (depth >= num_layers) return std::nullopt;
  const std::uint32_t next = depth < 16 ? 2 * depth : depth + 4;
  return std::min(next, num_layers);
}

BoostSearchPlanner::BoostSearchPlanner(ModelShape shape)
    : shape_(shape), queue_(boost_candidates(shape)) {
  initial_count_ = queue_.size();
  std::reverse(queue_.begin(), queue_.end());
}

std::optional<PlannedConfig> BoostSearchPlanner::next() {
  if (pending_) return pending_;
  if (done_ || queue_.empty()) {
    done_ = true;
    return std::nullopt;
  }
  pending_ = queue_.back();
  queue_.pop_back();
  return pending_;
}

void BoostSearchPlanner::record(double delta_ppl) {
  if (!pending_) fail(ErrorKind::InvalidArgument, "no candidate awaiting a result");
  const bool improved = trace_.empty() || delta_ppl < best().delta_ppl;
  trace_.push_back({*pending_, delta_ppl});
  pending_.reset();

  if (extending_) {
    if (improved) {
      schedule_extension();
    } else {
      done_ = true;
    }
  } else if (trace_.size() == initial_count_) {
    extending_ = true;
    schedule_extension();
  }
}

void BoostSearchPlanner::schedule_extension() {
  const auto& winner = best().candidate;
  std::uint32_t deepest = 0;
  for (const auto& e : trace_) deepest = std::max(deepest, e.candidate.depth);
  // Only a winner at the deepest tested depth suggests going further.
  if (winner.depth == 0 || winner.depth < deepest) {
    done_ = true;
    return;
  }
  const auto depth = next_boost_depth(winner.depth, shape_.num_layers);
  if (!depth) {
    done_ = true;
    return;
  }
  queue_.push_back({"E" + std::to_string(*depth) + "-" + boost_tag(winner.boost), *depth,
                    winner.boost, early_boost_config(shape_.num_layers, *depth, winner.boost)});
}

const BoostSearchPlanner::Evaluation& BoostSearchPlanner::best() const {
  if (trace_.empty()) fail(ErrorKind::InvalidArgument, "no evaluations recorded");
  return *std::min_element(trace_.begin(), trace_.end(), [](const auto& a, const auto& b) {
    return a.delta_ppl < b.delta_ppl;
  });
}

}  // namespace anglekv

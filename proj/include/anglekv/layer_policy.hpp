#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anglekv/norm_codec.hpp"

namespace anglekv {

inline constexpr std::uint64_t kDefaultSeed = 42;

struct ModelShape {
  std::uint32_t num_layers = 0;
  std::uint32_t head_dim = 0;
  std::uint32_t kv_heads = 1;

  void validate() const;
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Angle codebook sizes for one layer, (n_K, n_V).
struct LayerCodebooks {
  std::uint32_t nk = 128;
  std::uint32_t nv = 64;

  friend bool operator==(const LayerCodebooks&, const LayerCodebooks&) = default;
};

inline constexpr LayerCodebooks kBaselineCodebooks{128, 64};
inline constexpr LayerCodebooks kKeyBoost{256, 128};
inline constexpr LayerCodebooks kValueBoost{128, 256};

struct LayerQuantConfig {
  std::vector<LayerCodebooks> layers;
  NormQuantSpec k_norm = NormQuantSpec::fp32();
  NormQuantSpec v_norm = NormQuantSpec::fp32();
  std::uint64_t seed = kDefaultSeed;

  static LayerQuantConfig uniform(std::uint32_t num_layers,
                                  LayerCodebooks books = kBaselineCodebooks);

  void validate() const;
  void check_against(const ModelShape& shape) const;
  void set_norm_profile(NormProfile profile);
  // FNV-1a 64 over canonical_bytes().
  std::uint64_t hash() const;
  // Little-endian: u32 L, L x (u32 nk, u32 nv), k/v norm (u8 mode, u8 bits), u64 seed.
  std::vector<std::uint8_t> canonical_bytes() const;

  friend bool operator==(const LayerQuantConfig&, const LayerQuantConfig&) = default;
};

/// Rates in bits per element. Totals average K and V sides arithmetically.
struct RateReport {
  double avg_angle_bits = 0.0;
  double k_angle_bits = 0.0;
  double v_angle_bits = 0.0;
  double k_total_bits = 0.0;
  double v_total_bits = 0.0;
  double avg_total_bits = 0.0;
  // Fixed-width, byte-aligned container rate (header excluded).
  double packed_angle_bits = 0.0;
  double packed_bits_per_element = 0.0;
};

double average_angle_bits(const LayerQuantConfig& config);
RateReport total_bits(const LayerQuantConfig& config, const ModelShape& shape);

// Bits of one packed vector record, including padding to a whole byte.
std::uint64_t record_bits(std::uint32_t n, const NormQuantSpec& norm, std::uint32_t head_dim);

enum class Model { TinyLlama, Mistral7B, SmolLM2, Phi15, StableLM2, StarCoder2, OLMo };

std::vector<Model> all_models();
std::string model_name(Model model);
Model parse_model(const std::string& name);

struct Preset {
  Model model;
  ModelShape shape;
  LayerQuantConfig config;
};

/// Best per-layer configuration reported for each evaluated model.
Preset preset(Model model, NormProfile norms = NormProfile::Fp32,
              std::uint64_t seed = kDefaultSeed);

struct PlannedConfig {
  std::string label;
  std::uint32_t depth = 0;  // boosted layer count
  LayerCodebooks boost = kBaselineCodebooks;
  LayerQuantConfig config;
};

// Layers listed in `boosted` get `boost`, all others the K128V64 baseline.
LayerQuantConfig boosted_config(std::uint32_t num_layers, const std::vector<std::uint32_t>& boosted,
                                LayerCodebooks boost);
LayerQuantConfig early_boost_config(std::uint32_t num_layers, std::uint32_t depth,
                                    LayerCodebooks boost);

/// Early-boost heuristic: depths {4, 8, 16} x {K256V128, K128V256}, then the
/// uniform baseline.
std::vector<PlannedConfig> boost_candidates(const ModelShape& shape);

/// One config per contiguous group of `group_size` layers, boosting only that group.
std::vector<PlannedConfig> group_sweep_plan(const ModelShape& shape, std::uint32_t group_size,
                                            LayerCodebooks boost = kKeyBoost);

// Depth after `depth` when the deepest candidate keeps winning: doubling
// below 16, then steps of 4, capped at num_layers.
std::optional<std::uint32_t> next_boost_depth(std::uint32_t depth, std::uint32_t num_layers);

/// Drives the early-boost search: hands out candidates, takes back their
/// measured quality deltas, and extends the winning depth while it improves.
class BoostSearchPlanner {
 public:
  struct Evaluation {
    PlannedConfig candidate;
    double delta_ppl;
  };

  explicit BoostSearchPlanner(ModelShape shape);

  // Next config to evaluate, or nullopt when the search is finished.
  std::optional<PlannedConfig> next();
  void record(double delta_ppl);

  bool finished() const noexcept { return done_; }
  const std::vector<Evaluation>& trace() const noexcept { return trace_; }
  const Evaluation& best() const;

 private:
  void schedule_extension();

  ModelShape shape_;
  std::vector<PlannedConfig> queue_;
  std::optional<PlannedConfig> pending_;
  std::vector<Evaluation> trace_;
  std::size_t initial_count_ = 0;
  bool extending_ = false;
  bool done_ = false;
};

// JSON config document (see README for the schema).
struct ConfigDocument {
  ModelShape shape;
  LayerQuantConfig config;
  std::string label;
};

std::string to_json(const ConfigDocument& doc);
ConfigDocument config_from_json(const std::string& text);
ConfigDocument load_config_file(const std::string& path);
void save_config_file(const std::string& path, const ConfigDocument& doc);

}  // namespace anglekv

#include <fstream>
#include <sstream>

#include "anglekv/error.hpp"
#include "anglekv/layer_policy.hpp"
#include "json.hpp"

namespace anglekv {

using nlohmann::json;

namespace {

json norm_to_json(const NormQuantSpec& s) {
  if (s.fp32_passthrough) return json{{"bits", "fp32"}};
  return json{{"bits", s.bits}, {"space", s.space == NormSpace::Log ? "log" : "linear"}};
}

NormQuantSpec norm_from_json(const json& j) {
  const auto& bits = j.at("bits");
  if (bits.is_string()) {
    if (bits.get<std::string>() != "fp32") {
      fail(ErrorKind::Format, "norm bits must be an integer or \"fp32\"");
    }
    return NormQuantSpec::fp32();
  }
  const std::string space = j.value("space", "linear");
  if (space != "linear" && space != "log") {
    fail(ErrorKind::Format, "norm space must be \"linear\" or \"log\"");
  }
  NormQuantSpec s = space == "log" ? NormQuantSpec::log(bits.get<unsigned>())
                                   : NormQuantSpec::linear(bits.get<unsigned>());
  s.validate();
  return s;
}

}  // namespace

std::string to_json(const ConfigDocument& doc) {
  json j;
  if (!doc.label.empty()) j["label"] = doc.label;
  j["model_shape"] = {{"layers", doc.shape.num_layers},
                      {"head_dim", doc.shape.head_dim},
                      {"kv_heads", doc.shape.kv_heads}};
  j["seed"] = doc.config.seed;
  json layers = json::array();
  for (const auto& l : doc.config.layers) layers.push_back({{"nk", l.nk}, {"nv", l.nv}});
  j["layers"] = std::move(layers);
  j["k_norm"] = norm_to_json(doc.config.k_norm);
  j["v_norm"] = norm_to_json(doc.config.v_norm);
  return j.dump(2) + "\n";
}

ConfigDocument config_from_json(const std::string& text) {
  ConfigDocument doc;
  try {
    const json j = json::parse(text);
    const auto& shape = j.at("model_shape");
    doc.shape.num_layers = shape.at("layers").get<std::uint32_t>();
    doc.shape.head_dim = shape.at("head_dim").get<std::uint32_t>();
    doc.shape.kv_heads = shape.value("kv_heads", 1U);
    doc.config.seed = j.value("seed", kDefaultSeed);
    for (const auto& l : j.at("layers")) {
      doc.config.layers.push_back({l.at("nk").get<std::uint32_t>(), l.at("nv").get<std::uint32_t>()});
    }
    doc.config.k_norm = j.contains("k_norm") ? norm_from_json(j["k_norm"]) : NormQuantSpec::fp32();
    doc.config.v_norm = j.contains("v_norm") ? norm_from_json(j["v_norm"]) : NormQuantSpec::fp32();
    doc.label = j.value("label", "");
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("config JSON: ") + e.what());
  }
  doc.config.check_against(doc.shape);
  return doc;
}

ConfigDocument load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config_file(const std::string& path, const ConfigDocument& doc) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write config file " + path);
  out << to_json(doc);
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

}  // namespace anglekv

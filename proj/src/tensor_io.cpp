#include "anglekv/tensor_io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "anglekv/error.hpp"
#include "json.hpp"

namespace anglekv {

using nlohmann::json;

std::string sidecar_path(const std::string& path) { return path + ".json"; }

void write_tensor_dump(const std::string& path, const KvTensorSet& t) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(t.data().size() * 4);
  for (const float v : t.data()) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  write_file_bytes(path, bytes);

  const json meta = {{"format", "anglekv-tensors"},
                     {"dtype", "float32"},
                     {"endianness", "little"},
                     {"layout", {"layer", "side", "head", "token", "dim"}},
                     {"layers", t.layers()},
                     {"heads", t.heads()},
                     {"tokens", t.tokens()},
                     {"head_dim", t.head_dim()}};
  std::ofstream out(sidecar_path(path));
  if (!out) fail(ErrorKind::Io, "cannot write " + sidecar_path(path));
  out << meta.dump(2) << "\n";
}

KvTensorSet read_tensor_dump(const std::string& path) {
  std::ifstream in(sidecar_path(path));
  if (!in) fail(ErrorKind::Io, "cannot open sidecar " + sidecar_path(path));
  std::ostringstream ss;
  ss << in.rdbuf();

  std::uint32_t layers = 0, heads = 0, tokens = 0, dim = 0;
  try {
    const json meta = json::parse(ss.str());
    if (meta.value("dtype", "float32") != "float32") {
      fail(ErrorKind::Format, "only float32 tensor dumps are supported");
    }
    layers = meta.at("layers").get<std::uint32_t>();
    heads = meta.at("heads").get<std::uint32_t>();
    tokens = meta.at("tokens").get<std::uint32_t>();
    dim = meta.at("head_dim").get<std::uint32_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("tensor sidecar: ") + e.what());
  }

  KvTensorSet t(layers, heads, tokens, dim);
  const auto bytes = read_file_bytes(path);
  if (bytes.size() != t.data().size() * 4) {
    fail(ErrorKind::Format, "tensor dump holds " + std::to_string(bytes.size()) +
                                " bytes, sidecar implies " +
                                std::to_string(t.data().size() * 4));
  }
  for (std::size_t i = 0; i < t.data().size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= std::uint32_t{bytes[4 * i + b]} << (8 * b);
    t.data()[i] = std::bit_cast<float>(u);
  }
  return t;
}

}  // namespace anglekv

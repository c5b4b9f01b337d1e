#pragma once

#include <string>

#include "anglekv/container.hpp"

namespace anglekv {

// Raw little-endian float32 dump in [layer][side][head][token][dim] order
// plus a JSON sidecar at `<path>.json` describing the dims.
void write_tensor_dump(const std::string& path, const KvTensorSet& tensors);
KvTensorSet read_tensor_dump(const std::string& path);

std::string sidecar_path(const std::string& path);

}  // namespace anglekv

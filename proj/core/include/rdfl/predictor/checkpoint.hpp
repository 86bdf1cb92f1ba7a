#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "rdfl/predictor/mlp.hpp"

namespace rdfl::predictor {

// checkpoint.bin layout, all integers and reals little-endian:
//
//   magic        8 bytes  "RDFLCKPT"
//   version      u32      1
//   tensor_count u32
//   per tensor:
//     name_len   u32, name bytes (UTF-8, no terminator)
//     ndim       u32, dims u64 × ndim
//     data       f64 × prod(dims), row-major
//
// Tensors are named "layer{l}.weight" (out × in) and "layer{l}.bias" (out).
// checkpoint.json is the shape manifest: tensor names, shapes and byte
// offsets of each data block, plus the non-trained predictor settings.

void save_checkpoint(const MlpParams& params, const std::filesystem::path& bin_path,
                     const std::filesystem::path& manifest_path);

MlpParams load_checkpoint(const std::filesystem::path& bin_path,
                          const std::filesystem::path& manifest_path);

nlohmann::json checkpoint_manifest(const MlpParams& params);

}  // namespace rdfl::predictor

#pragma once

#include <string>

#include <json.hpp>

#include "netmod/diff/nn.hpp"

namespace netmod::diff {

// Checkpoint file: magic, format version, a JSON manifest (hyperparameters,
// normalizers, training provenance) and a flat name -> (shape, raw
// little-endian f64 array) parameter table.
constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const nlohmann::ordered_json& manifest);

struct Checkpoint {
  ParamStore params;
  nlohmann::ordered_json manifest;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace netmod::diff

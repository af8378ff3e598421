#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stgin/data.hpp"
#include "stgin/stgin.hpp"

namespace stgin {

// JSON document:
//   format "stgin-checkpoint", version 1,
//   dims {field: value, ...}, seed, normalization {min, max},
//   tensors [{name, shape, data}, ...] in parameter visit order.
// Doubles are written in shortest round-trip form, so saving the same model
// twice gives identical bytes.
struct Checkpoint {
  StginModel model;
  NormStats norm;
};

void save_checkpoint(const std::filesystem::path& path, const StginModel& model,
                     const NormStats& norm);
/// Throws CheckpointError on a malformed file, unknown version or tensor
/// mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Names of dims fields that differ; empty when compatible.
std::vector<std::string> dims_mismatch(const StginDims& expected, const StginDims& found);

}  // namespace stgin

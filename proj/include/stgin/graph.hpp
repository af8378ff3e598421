#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "stgin/tensor.hpp"

namespace stgin {

/// Weighted directed road graph. Row a of the adjacency holds the weights of
/// edges a → b; a node's neighbourhood always contains itself.
struct RoadGraph {
  std::size_t n_nodes = 0;
  Tensor adjacency;
  std::vector<std::vector<std::size_t>> neighborhoods;
  double sigma = 0.0;
  double kappa = 0.0;

  /// N×N flags, 1 where b ∈ 𝒩_a.
  std::vector<std::uint8_t> neighbor_mask() const;
  /// Nonzero off-diagonal entries.
  std::size_t edge_count() const;
};

/// Gaussian-kernel weights exp(−len²/σ²) for len ≤ κ, else 0. Non-finite
/// distances mean "unreachable" and get weight 0.
RoadGraph build_adjacency(const Tensor& distances, double sigma, double kappa);

/// Population standard deviation of the finite off-diagonal distances.
double sigma_from_distances(const Tensor& distances);

/// Linearly interpolated percentile (0–100) of the finite off-diagonal
/// distances. Percentile 0 lands just below the smallest one, so no positive
/// length passes the threshold.
double kappa_from_percentile(const Tensor& distances, double percentile);

/// Validates a weight matrix and derives neighbourhoods. A diagonal entry
/// other than 1 is set to 1 with a warning.
RoadGraph graph_from_adjacency(Tensor adjacency);

RoadGraph load_prebuilt_adjacency(const std::filesystem::path& path);
/// Square, nonnegative, zero-diagonal distance matrix ("inf" allowed).
Tensor load_distances(const std::filesystem::path& path);
void save_adjacency(const std::filesystem::path& path, const RoadGraph& graph);

}  // namespace stgin

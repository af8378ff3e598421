#include "stgin/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stgin/csv.hpp"
#include "stgin/errors.hpp"
#include "stgin/log.hpp"

namespace stgin {

namespace {

std::string cell_name(std::size_t r, std::size_t c) {
  return "row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1);
}

void require_square(const Tensor& m, const char* what) {
  if (m.rank() != 2 || m.dim(0) != m.dim(1) || m.dim(0) == 0) {
    throw ValidationError(std::string(what) + " must be a nonempty square matrix, got " +
                          shape_string(m.shape()));
  }
}

std::vector<double> off_diagonal_finite(const Tensor& d) {
  std::vector<double> out;
  const std::size_t n = d.rows();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && std::isfinite(d(a, b))) out.push_back(d(a, b));
    }
  }
  return out;
}

void derive_neighborhoods(RoadGraph& g) {
  const std::size_t n = g.n_nodes;
  g.neighborhoods.assign(n, {});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (g.adjacency(a, b) > 0.0) g.neighborhoods[a].push_back(b);
    }
  }
}

}  // namespace

std::vector<std::uint8_t> RoadGraph::neighbor_mask() const {
  std::vector<std::uint8_t> mask(n_nodes * n_nodes, 0);
  for (std::size_t a = 0; a < n_nodes; ++a) {
    for (std::size_t b : neighborhoods[a]) mask[a * n_nodes + b] = 1;
  }
  return mask;
}

std::size_t RoadGraph::edge_count() const {
  std::size_t count = 0;
  for (std::size_t a = 0; a < n_nodes; ++a) {
    for (std::size_t b : neighborhoods[a]) count += (a != b);
  }
  return count;
}

RoadGraph build_adjacency(const Tensor& distances, double sigma, double kappa) {
  require_square(distances, "distance matrix");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("sigma must be positive, got " + csv::format_double(sigma));
  }
  if (!(kappa > 0.0)) {
    throw ValidationError("kappa must be positive, got " + csv::format_double(kappa));
  }
  const std::size_t n = distances.rows();
  RoadGraph g;
  g.n_nodes = n;
  g.sigma = sigma;
  g.kappa = kappa;
  g.adjacency = Tensor({n, n});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double len = distances(a, b);
      if (std::isnan(len) || len < 0.0) {
        throw ValidationError("distance at " + cell_name(a, b) + " is " +
                              csv::format_double(len) + "; must be nonnegative");
      }
      if (a == b) {
        if (len != 0.0) {
          throw ValidationError("self-distance at " + cell_name(a, b) + " must be 0");
        }
        g.adjacency(a, b) = 1.0;
        continue;
      }
      if (len > kappa) continue;
      const double r = len / sigma;
      // A kept edge must stay an edge even when the kernel underflows.
      g.adjacency(a, b) = std::max(std::exp(-r * r), std::numeric_limits<double>::min());
    }
  }
  derive_neighborhoods(g);
  return g;
}

double sigma_from_distances(const Tensor& distances) {
  require_square(distances, "distance matrix");
  const auto values = off_diagonal_finite(distances);
  if (values.size() < 2) {
    throw ValidationError("sigma needs at least two finite off-diagonal distances");
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(values.size()));
}

double kappa_from_percentile(const Tensor& distances, double percentile) {
  require_square(distances, "distance matrix");
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw ValidationError("kappa percentile must be in [0, 100]");
  }
  auto values = off_diagonal_finite(distances);
  if (values.empty()) throw ValidationError("no finite off-diagonal distances");
  std::sort(values.begin(), values.end());
  if (percentile == 0.0) return std::nextafter(values.front(), 0.0);
  const double pos = percentile / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

RoadGraph graph_from_adjacency(Tensor adjacency) {
  if (adjacency.rank() != 2 || adjacency.dim(0) != adjacency.dim(1) || adjacency.dim(0) == 0) {
    throw FormatError("adjacency must be a nonempty square matrix, got " +
                      shape_string(adjacency.shape()));
  }
  const std::size_t n = adjacency.rows();
  std::size_t fixed_diagonal = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double w = adjacency(a, b);
      if (!(w >= 0.0 && w <= 1.0)) {
        throw FormatError("adjacency weight at " + cell_name(a, b) + " is " +
                          csv::format_double(w) + "; must be in [0, 1]");
      }
    }
    if (adjacency(a, a) != 1.0) {
      adjacency(a, a) = 1.0;
      ++fixed_diagonal;
    }
  }
  if (fixed_diagonal > 0) {
    log_warning("adjacency diagonal set to 1 on " + std::to_string(fixed_diagonal) + " node(s)");
  }
  RoadGraph g;
  g.n_nodes = n;
  g.adjacency = std::move(adjacency);
  derive_neighborhoods(g);
  return g;
}

RoadGraph load_prebuilt_adjacency(const std::filesystem::path& path) {
  Tensor m = csv::read_matrix(path);
  if (m.dim(0) != m.dim(1)) {
    throw FormatError(path.string() + ": adjacency has " + std::to_string(m.dim(0)) +
                      " rows and " + std::to_string(m.dim(1)) + " columns");
  }
  return graph_from_adjacency(std::move(m));
}

Tensor load_distances(const std::filesystem::path& path) {
  Tensor m = csv::read_matrix(path);
  if (m.dim(0) != m.dim(1)) {
    throw FormatError(path.string() + ": distance matrix has " + std::to_string(m.dim(0)) +
                      " rows and " + std::to_string(m.dim(1)) + " columns");
  }
  for (std::size_t a = 0; a < m.rows(); ++a) {
    for (std::size_t b = 0; b < m.cols(); ++b) {
      const double v = m(a, b);
      if (std::isnan(v) || v < 0.0 || (a == b && v != 0.0)) {
        throw FormatError(path.string() + ": bad distance at " + cell_name(a, b));
      }
    }
  }
  return m;
}

void save_adjacency(const std::filesystem::path& path, const RoadGraph& graph) {
  csv::write_matrix(path, graph.adjacency);
}

}  // namespace stgin

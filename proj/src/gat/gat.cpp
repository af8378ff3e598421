#include "stgin/gat.hpp"

#include <string>

#include "stgin/errors.hpp"
#include "stgin/ops.hpp"
#include "stgin/params.hpp"

namespace stgin {

void FcaConfig::validate() const {
  if (in_channels == 0) throw ValidationError("FCA needs at least one input channel");
  if (kernel_width % 2 == 0) {
    throw ValidationError("FCA kernel width must be odd, got " + std::to_string(kernel_width));
  }
  if (out_channels == 0) throw ValidationError("FCA out_channels must be at least 1");
}

FcaParams<Tensor> init_fca(const FcaConfig& config, random::Engine& rng) {
  config.validate();
  FcaParams<Tensor> p;
  p.kernels = random::fan_in_uniform(
      rng, {config.out_channels, config.in_channels, config.kernel_width},
      config.in_channels * config.kernel_width);
  p.bias = Tensor({1, config.out_channels});
  return p;
}

Var fca_forward(const FcaParams<Var>& p, Var x, std::size_t blocks) {
  return ops::add_row(ops::conv1d_time(x, p.kernels, blocks), p.bias);
}

Tensor fca_aggregate(const FcaParams<Tensor>& p, const Tensor& speeds, const Tensor& externals) {
  if (speeds.rank() != 2) {
    throw DimensionError("speed window must be E×N, got " + shape_string(speeds.shape()));
  }
  const std::size_t steps = speeds.dim(0), nodes = speeds.dim(1);
  std::size_t k = 0;
  if (!externals.empty()) {
    if (externals.rank() != 3 || externals.dim(0) != steps || externals.dim(1) != nodes) {
      throw ValidationError("externals " + shape_string(externals.shape()) +
                            " are not aligned with speeds " + shape_string(speeds.shape()));
    }
    k = externals.dim(2);
  }
  const std::size_t channels = 1 + k;
  if (p.kernels.dim(1) != channels) {
    throw DimensionError("FCA kernels expect " + std::to_string(p.kernels.dim(1)) +
                         " input channels, got " + std::to_string(channels));
  }
  // Node-major stacking: block a holds node a's E×channels series.
  Tensor x({nodes * steps, channels});
  for (std::size_t a = 0; a < nodes; ++a) {
    for (std::size_t t = 0; t < steps; ++t) {
      x(a * steps + t, 0) = speeds(t, a);
      for (std::size_t j = 0; j < k; ++j) x(a * steps + t, 1 + j) = externals.at(t, a, j);
    }
  }
  Tape tape(false);
  const auto bound = params::bind(tape, p);
  const Tensor& y = fca_forward(bound, tape.constant(std::move(x)), nodes).value();
  const std::size_t f = y.cols();
  Tensor out({steps, nodes, f});
  for (std::size_t a = 0; a < nodes; ++a) {
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t c = 0; c < f; ++c) out.at(t, a, c) = y(a * steps + t, c);
    }
  }
  return out;
}

void GatConfig::validate() const {
  if (heads == 0) throw ValidationError("GAT needs at least one head");
  if (in_features == 0 || out_features == 0) throw ValidationError("GAT feature sizes must be positive");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw ValidationError("LeakyReLU slope must be in (0, 1)");
  }
}

GatParams<Tensor> init_gat(const GatConfig& config, random::Engine& rng) {
  config.validate();
  GatParams<Tensor> p;
  for (std::size_t h = 0; h < config.heads; ++h) {
    p.weight.push_back(random::fan_in_uniform(rng, {config.out_features, config.in_features},
                                              config.in_features));
    p.att.push_back(random::fan_in_uniform(rng, {2 * config.out_features, 1},
                                           2 * config.out_features));
  }
  return p;
}

namespace {

void check_input(const GatConfig& config, const GatParams<Var>& p, Var x, const RoadGraph& graph,
                 std::size_t blocks) {
  if (p.weight.size() != config.heads || p.att.size() != config.heads) {
    throw DimensionError("GAT parameters hold " + std::to_string(p.weight.size()) +
                         " heads, config says " + std::to_string(config.heads));
  }
  if (blocks == 0 || x.rows() != blocks * graph.n_nodes) {
    throw DimensionError("GAT input has " + std::to_string(x.rows()) + " rows, expected " +
                         std::to_string(blocks) + "×" + std::to_string(graph.n_nodes) + " nodes");
  }
  if (x.cols() != config.in_features) {
    throw DimensionError("GAT input has " + std::to_string(x.cols()) + " features, expected " +
                         std::to_string(config.in_features));
  }
}

struct HeadOutput {
  Var features;   // W x, (blocks·N)×ℱ′
  Var attention;  // (blocks·N)×N
};

HeadOutput run_head(const GatConfig& config, Var weight, Var att, Var x, const RoadGraph& graph,
                    const std::vector<std::uint8_t>& mask, std::size_t blocks) {
  const std::size_t f = config.out_features;
  const Var h = ops::matmul_nt(x, weight);
  const Var src = ops::matmul(h, ops::slice_rows(att, 0, f));
  const Var dst = ops::matmul(h, ops::slice_rows(att, f, f));
  const Var e = ops::leaky_relu(ops::pair_sum(src, dst, blocks), config.leaky_slope);
  return {h, ops::masked_softmax_rows(e, mask, graph.n_nodes)};
}

}  // namespace

std::vector<Var> gat_attention(const GatConfig& config, const GatParams<Var>& p, Var x,
                               const RoadGraph& graph, std::size_t blocks) {
  check_input(config, p, x, graph, blocks);
  const auto mask = graph.neighbor_mask();
  std::vector<Var> out;
  for (std::size_t h = 0; h < config.heads; ++h) {
    out.push_back(run_head(config, p.weight[h], p.att[h], x, graph, mask, blocks).attention);
  }
  return out;
}

Var gat_layer(const GatConfig& config, const GatParams<Var>& p, Var x, const RoadGraph& graph,
              std::size_t blocks) {
  check_input(config, p, x, graph, blocks);
  const auto mask = graph.neighbor_mask();
  Var total;
  for (std::size_t h = 0; h < config.heads; ++h) {
    const HeadOutput head = run_head(config, p.weight[h], p.att[h], x, graph, mask, blocks);
    const Var mixed = ops::block_matmul(head.attention, head.features, blocks);
    total = total.valid() ? ops::add(total, mixed) : mixed;
  }
  return ops::elu(ops::scale(total, 1.0 / static_cast<double>(config.heads)));
}

Tensor attention_coefficients(const Tensor& x, const GatLayer& layer, const RoadGraph& graph) {
  Tape tape(false);
  const auto bound = params::bind(tape, layer.params);
  const auto heads = gat_attention(layer.config, bound, tape.constant(x), graph, 1);
  const std::size_t n = graph.n_nodes;
  Tensor out({heads.size(), n, n});
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const Tensor& a = heads[h].value();
    std::copy(a.storage().begin(), a.storage().end(), out.storage().begin() + h * n * n);
  }
  return out;
}

Tensor gat_forward(const Tensor& x, const GatLayer& layer, const RoadGraph& graph) {
  Tape tape(false);
  const auto bound = params::bind(tape, layer.params);
  return gat_layer(layer.config, bound, tape.constant(x), graph, 1).value();
}

}  // namespace stgin

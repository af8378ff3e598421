#include "stgin/stgin.hpp"

#include <string>

#include "stgin/errors.hpp"
#include "stgin/ops.hpp"
#include "stgin/params.hpp"

namespace stgin {

namespace {

std::string num(std::size_t v) { return std::to_string(v); }

/// Row permutation from blocks of `inner` rows per outer index to the
/// transposed grouping: out row (i·outer + o) = in row (o·inner + i).
std::vector<std::size_t> transpose_blocks(std::size_t outer, std::size_t inner) {
  std::vector<std::size_t> index(outer * inner);
  for (std::size_t i = 0; i < inner; ++i) {
    for (std::size_t o = 0; o < outer; ++o) index[i * outer + o] = o * inner + i;
  }
  return index;
}

}  // namespace

void StginDims::validate() const {
  if (nodes == 0) throw ValidationError("model needs at least one node");
  if (input_len == 0 || horizon == 0) throw ValidationError("input length and horizon must be positive");
  if (!(step_minutes > 0.0)) throw ValidationError("step_minutes must be positive");
  fca().validate();
  if (use_graph) gat().validate();
  informer().validate();
}

FcaConfig StginDims::fca() const { return {1 + externals, fca_width, fca_channels}; }

GatConfig StginDims::gat() const { return {gat_heads, fca_channels, d_model, leaky_slope}; }

InformerConfig StginDims::informer() const {
  InformerConfig c;
  c.in_features = use_graph ? d_model : fca_channels;
  c.d_model = d_model;
  c.heads = heads;
  c.encoder_layers = encoder_layers;
  c.replicas = replicas;
  c.decoder_layers = decoder_layers;
  c.input_len = input_len;
  c.horizon = horizon;
  c.token_len = token_len;
  c.c_factor = c_factor;
  c.ffn_multiplier = ffn_multiplier;
  return c;
}

StginModel init_params(const StginDims& dims, std::uint64_t seed) {
  dims.validate();
  random::Engine rng(seed);
  StginModel m;
  m.dims = dims;
  m.seed = seed;
  m.params.fca = init_fca(dims.fca(), rng);
  if (dims.use_graph) m.params.gat = init_gat(dims.gat(), rng);
  const std::size_t units = dims.shared_informer ? 1 : dims.nodes;
  for (std::size_t i = 0; i < units; ++i) {
    m.params.informers.push_back(init_informer(dims.informer(), rng));
  }
  m.params.node_embed = random::fan_in_uniform(rng, {dims.nodes, dims.d_model}, dims.d_model);
  m.params.out_w = random::fan_in_uniform(rng, {dims.d_model, 1}, dims.d_model);
  m.params.out_b = Tensor({1, 1});
  return m;
}

Tensor node_major_input(const Tensor& speeds, const Tensor& externals) {
  if (speeds.rank() != 2) {
    throw DimensionError("speed window must be E×N, got " + shape_string(speeds.shape()));
  }
  const std::size_t e = speeds.dim(0), n = speeds.dim(1);
  std::size_t k = 0;
  if (!externals.empty()) {
    if (externals.rank() != 3 || externals.dim(0) != e || externals.dim(1) != n) {
      throw ValidationError("externals " + shape_string(externals.shape()) +
                            " are not aligned with speeds " + shape_string(speeds.shape()));
    }
    k = externals.dim(2);
  }
  Tensor x({n * e, 1 + k});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t t = 0; t < e; ++t) {
      x(a * e + t, 0) = speeds(t, a);
      for (std::size_t j = 0; j < k; ++j) x(a * e + t, 1 + j) = externals.at(t, a, j);
    }
  }
  return x;
}

Var stgin_forward(const StginDims& dims, const StginParams<Var>& p, Var input,
                  const RoadGraph& graph, SelectionTrace* trace) {
  const std::size_t n = dims.nodes, e = dims.input_len, f = dims.horizon;
  if (graph.n_nodes != n) {
    throw ContractError("graph has " + num(graph.n_nodes) + " nodes, model expects " + num(n));
  }
  if (input.rows() != n * e || input.cols() != 1 + dims.externals) {
    throw ContractError("FCA stage: input " + shape_string(input.shape()) + " does not match " +
                        num(n) + " nodes × " + num(e) + " steps × " + num(1 + dims.externals) +
                        " channels");
  }
  Var h = fca_forward(p.fca, input, n);
  if (dims.use_graph) {
    const Var by_time = ops::gather_rows(h, transpose_blocks(n, e));
    const Var spatial = gat_layer(dims.gat(), p.gat, by_time, graph, e);
    h = ops::gather_rows(spatial, transpose_blocks(e, n));
  }
  const InformerConfig ic = dims.informer();
  Var temporal;
  if (p.informers.size() == 1) {
    temporal = informer_forward(ic, p.informers.front(), h, n, p.node_embed, trace);
  } else {
    if (p.informers.size() != n) {
      throw ContractError("Informer stage: " + num(p.informers.size()) + " units for " + num(n) +
                          " nodes");
    }
    for (std::size_t a = 0; a < n; ++a) {
      const Var y = informer_forward(ic, p.informers[a], ops::slice_rows(h, a * e, e), 1,
                                     ops::slice_rows(p.node_embed, a, 1), trace);
      temporal = temporal.valid() ? ops::concat_rows(temporal, y) : y;
    }
  }
  const Var out = ops::add_row(ops::matmul(temporal, p.out_w), p.out_b);
  return ops::reshape(ops::gather_rows(out, transpose_blocks(n, f)), {f, n});
}

Forecast forward(const Tensor& window, const RoadGraph& graph, const StginModel& model,
                 const Tensor& externals) {
  const StginDims& d = model.dims;
  if (window.rank() != 2 || window.dim(0) != d.input_len || window.dim(1) != d.nodes) {
    throw ContractError("forward: window " + shape_string(window.shape()) + " expected [" +
                        num(d.input_len) + "x" + num(d.nodes) + "]");
  }
  Tape tape(false);
  const auto bound = params::bind(tape, model.params);
  Forecast out;
  out.values =
      stgin_forward(d, bound, tape.constant(node_major_input(window, externals)), graph).value();
  out.horizon_minutes = static_cast<double>(d.horizon) * d.step_minutes;
  return out;
}

}  // namespace stgin

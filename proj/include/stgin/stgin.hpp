#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stgin/autograd.hpp"
#include "stgin/gat.hpp"
#include "stgin/graph.hpp"
#include "stgin/informer.hpp"
#include "stgin/tensor.hpp"

namespace stgin {

struct StginDims {
  std::size_t nodes = 1;       // N
  std::size_t input_len = 24;  // E
  std::size_t horizon = 3;     // F′
  std::size_t externals = 0;   // extra input channels per node and step
  std::size_t fca_channels = 8;
  std::size_t fca_width = 3;
  std::size_t gat_heads = 4;
  double leaky_slope = 0.2;
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t encoder_layers = 3;
  std::size_t replicas = 1;
  std::size_t decoder_layers = 1;
  std::size_t token_len = 12;
  double c_factor = 5.0;
  std::size_t ffn_multiplier = 4;
  bool shared_informer = true;
  bool use_graph = true;  // false bypasses the GAT (ablation)
  double step_minutes = 5.0;

  void validate() const;
  FcaConfig fca() const;
  GatConfig gat() const;
  InformerConfig informer() const;
};

template <class T>
struct StginParams {
  FcaParams<T> fca;
  GatParams<T> gat;                          // empty when the graph is bypassed
  std::vector<InformerParams<T>> informers;  // one if shared, else one per node
  T node_embed;                              // N×d
  T out_w;                                   // d×1
  T out_b;                                   // 1×1

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("fca", a.fca, b.fca);
    f("gat", a.gat, b.gat);
    f("informers", a.informers, b.informers);
    f("node_embed", a.node_embed, b.node_embed);
    f("out_w", a.out_w, b.out_w);
    f("out_b", a.out_b, b.out_b);
  }
};

struct StginModel {
  StginDims dims;
  std::uint64_t seed = 0;
  StginParams<Tensor> params;
};

StginModel init_params(const StginDims& dims, std::uint64_t seed);

struct Forecast {
  Tensor values;  // F′×N, normalized units
  double horizon_minutes = 0.0;
};

/// Stacks an E×N speed window (and [E, N, k] externals) node by node into
/// (N·E)×(1 + k) rows.
Tensor node_major_input(const Tensor& speeds, const Tensor& externals = Tensor());

/// Forward pass on a tape. input: node_major_input of one window. Returns
/// the F′×N forecast.
Var stgin_forward(const StginDims& dims, const StginParams<Var>& p, Var input,
                  const RoadGraph& graph, SelectionTrace* trace = nullptr);

Forecast forward(const Tensor& window, const RoadGraph& graph, const StginModel& model,
                 const Tensor& externals = Tensor());

}  // namespace stgin

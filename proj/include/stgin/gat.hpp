#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stgin/autograd.hpp"
#include "stgin/graph.hpp"
#include "stgin/random.hpp"
#include "stgin/tensor.hpp"

namespace stgin {

struct FcaConfig {
  std::size_t in_channels = 1;  // speed plus external factors
  std::size_t kernel_width = 3;
  std::size_t out_channels = 8;

  void validate() const;
};

template <class T>
struct FcaParams {
  T kernels;  // [out_channels, in_channels, kernel_width]
  T bias;     // 1×out_channels

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("kernels", a.kernels, b.kernels);
    f("bias", a.bias, b.bias);
  }
};

FcaParams<Tensor> init_fca(const FcaConfig& config, random::Engine& rng);

/// x: (blocks·E)×in_channels, one block of E steps per node.
Var fca_forward(const FcaParams<Var>& p, Var x, std::size_t blocks);

/// speeds: E×N; externals: [E, N, k] or empty. Returns [E, N, out_channels].
Tensor fca_aggregate(const FcaParams<Tensor>& p, const Tensor& speeds,
                     const Tensor& externals = Tensor());

struct GatConfig {
  std::size_t heads = 4;
  std::size_t in_features = 8;    // ℱ
  std::size_t out_features = 32;  // ℱ′
  double leaky_slope = 0.2;

  void validate() const;
};

template <class T>
struct GatParams {
  std::vector<T> weight;  // per head, ℱ′×ℱ
  std::vector<T> att;     // per head, (2ℱ′)×1: source half then target half

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("weight", a.weight, b.weight);
    f("att", a.att, b.att);
  }
};

GatParams<Tensor> init_gat(const GatConfig& config, random::Engine& rng);

struct GatLayer {
  GatConfig config;
  GatParams<Tensor> params;
};

/// Attention coefficients of every head: (blocks·N)×N per head, zero outside
/// each node's neighbourhood. x: (blocks·N)×ℱ, node rows grouped by block.
std::vector<Var> gat_attention(const GatConfig& config, const GatParams<Var>& p, Var x,
                               const RoadGraph& graph, std::size_t blocks);

/// ELU of the head-averaged neighbourhood aggregation; (blocks·N)×ℱ′.
Var gat_layer(const GatConfig& config, const GatParams<Var>& p, Var x, const RoadGraph& graph,
              std::size_t blocks);

/// x: N×ℱ. Returns [C, N, N].
Tensor attention_coefficients(const Tensor& x, const GatLayer& layer, const RoadGraph& graph);
/// x: N×ℱ. Returns N×ℱ′.
Tensor gat_forward(const Tensor& x, const GatLayer& layer, const RoadGraph& graph);

}  // namespace stgin

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stgin/autograd.hpp"
#include "stgin/random.hpp"
#include "stgin/tensor.hpp"

namespace stgin {

struct InformerConfig {
  std::size_t in_features = 32;  // width of the per-step input before projection
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t encoder_layers = 3;
  std::size_t replicas = 1;
  std::size_t decoder_layers = 1;
  std::size_t input_len = 24;  // E
  std::size_t horizon = 3;     // F′
  std::size_t token_len = 12;  // L_token
  double c_factor = 5.0;
  std::size_t ffn_multiplier = 4;
  double norm_eps = 1e-5;

  void validate() const;
  std::size_t d_head() const { return d_model / heads; }
  /// Time length of the encoder feature map.
  std::size_t feature_len() const;
};

template <class T>
struct AttentionParams {
  T wq, wk, wv;  // d×d; head h owns columns [h·d_head, (h+1)·d_head)
  T wo;          // d×d

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("wq", a.wq, b.wq);
    f("wk", a.wk, b.wk);
    f("wv", a.wv, b.wv);
    f("wo", a.wo, b.wo);
  }
};

template <class T>
struct LayerNormParams {
  T gain, bias;  // 1×d

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("gain", a.gain, b.gain);
    f("bias", a.bias, b.bias);
  }
};

template <class T>
struct FeedForwardParams {
  T w1, b1, w2, b2;

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("w1", a.w1, b.w1);
    f("b1", a.b1, b.b1);
    f("w2", a.w2, b.w2);
    f("b2", a.b2, b.b2);
  }
};

template <class T>
struct EncoderLayerParams {
  AttentionParams<T> attn;
  LayerNormParams<T> norm1;
  FeedForwardParams<T> ffn;
  LayerNormParams<T> norm2;

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("attn", a.attn, b.attn);
    f("norm1", a.norm1, b.norm1);
    f("ffn", a.ffn, b.ffn);
    f("norm2", a.norm2, b.norm2);
  }
};

template <class T>
struct DistillParams {
  T kernels;  // [d, d, 3]
  T bias;     // 1×d

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("kernels", a.kernels, b.kernels);
    f("bias", a.bias, b.bias);
  }
};

/// One encoder stack: attention layers with a distilling stage between
/// consecutive ones.
template <class T>
struct EncoderBranchParams {
  std::vector<EncoderLayerParams<T>> layers;
  std::vector<DistillParams<T>> distills;  // layers.size() − 1

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("layers", a.layers, b.layers);
    f("distills", a.distills, b.distills);
  }
};

template <class T>
struct DecoderLayerParams {
  AttentionParams<T> self_attn;
  LayerNormParams<T> norm1;
  AttentionParams<T> cross_attn;
  LayerNormParams<T> norm2;
  FeedForwardParams<T> ffn;
  LayerNormParams<T> norm3;

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("self_attn", a.self_attn, b.self_attn);
    f("norm1", a.norm1, b.norm1);
    f("cross_attn", a.cross_attn, b.cross_attn);
    f("norm2", a.norm2, b.norm2);
    f("ffn", a.ffn, b.ffn);
    f("norm3", a.norm3, b.norm3);
  }
};

template <class T>
struct InformerParams {
  T input_w;   // in_features×d
  T input_b;   // 1×d
  T position;  // (E + F′)×d, one row per time index
  std::vector<EncoderBranchParams<T>> encoder;  // branch 0 is the main stack
  std::vector<DecoderLayerParams<T>> decoder;

  template <class A, class B, class F>
  static void fields(A& a, B& b, F&& f) {
    f("input_w", a.input_w, b.input_w);
    f("input_b", a.input_b, b.input_b);
    f("position", a.position, b.position);
    f("encoder", a.encoder, b.encoder);
    f("decoder", a.decoder, b.decoder);
  }
};

InformerParams<Tensor> init_informer(const InformerConfig& config, random::Engine& rng);

/// Freezes ProbSparse query selections: the first forward pass after
/// construction records every selection, and each pass after rewind()
/// replays them in the same order.
class SelectionTrace {
 public:
  std::vector<std::uint8_t> apply(std::vector<std::uint8_t> computed);
  void rewind() { cursor_ = 0; }
  std::size_t size() const { return recorded_.size(); }

 private:
  std::vector<std::vector<std::uint8_t>> recorded_;
  std::size_t cursor_ = 0;
};

struct SparsityScore {
  Tensor m_bar;                    // l_Q
  std::vector<std::size_t> top_u;  // descending M̄, ties to the lower index
};

/// u = clamp(ceil(c·ln l_Q), 1, l_Q).
std::size_t select_u(std::size_t l_q, double c_factor = 5.0);

/// softmax(QKᵀ/√d)V with d = Q's column count.
Tensor full_attention(const Tensor& q, const Tensor& k, const Tensor& v);
/// M̄(q_i, K) = max_j s_ij − mean_j s_ij over all keys, s = QKᵀ/√d.
SparsityScore sparsity_measurement(const Tensor& q, const Tensor& k, std::size_t u);
/// Only the top-u queries keep their rows of Q; the rest are zero, so their
/// output is the column mean of V.
Tensor probsparse_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t u);

/// Conv1d (width 3) → ELU → MaxPool(3, 2, 1). x: L×d with even L.
Tensor distill(const Tensor& x, const DistillParams<Tensor>& p);

struct DecoderInput {
  Tensor token;        // L_token×d, trailing steps of the encoder input
  Tensor placeholder;  // F′×d zeros

  Tensor concatenated() const;
};

DecoderInput make_decoder_input(const Tensor& encoder_input, std::size_t token_len,
                                std::size_t horizon);

/// Encoder feature map of one L×d sequence (already embedded).
Tensor encode(const Tensor& x, const InformerConfig& config, const InformerParams<Tensor>& p);
/// Trailing F′ decoder steps for one sequence.
Tensor decode(const DecoderInput& input, const Tensor& feature_map, const InformerConfig& config,
              const InformerParams<Tensor>& p);

// Tape-level building blocks. Inputs stack `blocks` independent sequences
// row-wise; every op keeps them independent.

/// Which ProbSparse variant a self-attention uses.
enum class QueryMask { none, causal };

/// Multi-head attention. When `u` < query length, queries outside the top-u
/// are zeroed (ProbSparse); `causal` restricts query i to keys j ≤ i and
/// ranks each query only against earlier ones, so nothing at a later
/// position can influence it.
Var multi_head_attention(const InformerConfig& config, const AttentionParams<Var>& p, Var queries,
                         Var keys_values, std::size_t blocks, std::size_t u, QueryMask mask,
                         SelectionTrace* trace);

Var distill(Var x, const DistillParams<Var>& p, std::size_t blocks);

/// x: (blocks·E)×d embedded encoder input. Returns the concatenated
/// feature map, (blocks·feature_len)×d.
Var encode(const InformerConfig& config, const InformerParams<Var>& p, Var x, std::size_t blocks,
           SelectionTrace* trace);

/// First decoder sub-layer: norm(x + masked self-attention(x)).
Var decoder_self_attention(const InformerConfig& config, const DecoderLayerParams<Var>& p, Var x,
                           std::size_t blocks, SelectionTrace* trace);

/// x_de: (blocks·(L_token+F′))×d embedded decoder input. Returns the
/// trailing F′ steps of the last decoder layer, (blocks·F′)×d.
Var decode(const InformerConfig& config, const InformerParams<Var>& p, Var x_de, Var feature_map,
           std::size_t blocks, SelectionTrace* trace);

/// Full pass: projection, position (+ optional per-block embedding, blocks×d),
/// encoder, decoder. x: (blocks·E)×in_features → (blocks·F′)×d.
Var informer_forward(const InformerConfig& config, const InformerParams<Var>& p, Var x,
                     std::size_t blocks, Var block_embedding, SelectionTrace* trace);

}  // namespace stgin

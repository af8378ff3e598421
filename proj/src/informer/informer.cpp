#include "stgin/informer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stgin/errors.hpp"
#include "stgin/ops.hpp"
#include "stgin/params.hpp"

namespace stgin {

namespace {

std::string num(std::size_t v) { return std::to_string(v); }

std::size_t block_rows(Var x, std::size_t blocks, const char* what) {
  if (blocks == 0 || x.rows() % blocks != 0) {
    throw ContractError(std::string(what) + ": " + num(x.rows()) + " rows do not split into " +
                        num(blocks) + " sequences");
  }
  return x.rows() / blocks;
}

/// Indices of the u largest values, descending; equal values keep index order.
std::vector<std::size_t> top_indices(const std::vector<double>& values, std::size_t u) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  order.resize(std::min(u, order.size()));
  return order;
}

/// max − mean of row r over its first `width` entries.
double max_minus_mean(const Tensor& s, std::size_t r, std::size_t width) {
  double best = s(r, 0), total = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    best = std::max(best, s(r, j));
    total += s(r, j);
  }
  return best - total / static_cast<double>(width);
}

/// Keep flags for every query row of the stacked score matrix.
std::vector<std::uint8_t> choose_queries(const Tensor& s, std::size_t blocks, std::size_t u,
                                         QueryMask mask) {
  const std::size_t lq = s.rows() / blocks, lk = s.cols();
  std::vector<std::uint8_t> keep(s.rows(), 0);
  std::vector<double> m(lq);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < lq; ++i) {
      m[i] = max_minus_mean(s, b * lq + i, mask == QueryMask::causal ? i + 1 : lk);
    }
    if (mask == QueryMask::causal) {
      // Rank query i only among queries 0..i; earlier ones win ties.
      for (std::size_t i = 0; i < lq; ++i) {
        std::size_t ahead = 0;
        for (std::size_t k = 0; k < i; ++k) ahead += (m[k] >= m[i]);
        keep[b * lq + i] = ahead < u;
      }
    } else {
      for (std::size_t i : top_indices(m, u)) keep[b * lq + i] = 1;
    }
  }
  return keep;
}

std::vector<std::uint8_t> causal_mask(std::size_t n) {
  std::vector<std::uint8_t> mask(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) mask[i * n + j] = 1;
  }
  return mask;
}

/// One attention head over stacked sequences.
Var attention_head(Var q, Var k, Var v, std::size_t blocks, std::size_t u, QueryMask mask,
                   SelectionTrace* trace) {
  const std::size_t lq = block_rows(q, blocks, "attention queries");
  const std::size_t lk = block_rows(k, blocks, "attention keys");
  if (v.rows() != k.rows()) {
    throw DimensionError("attention keys have " + num(k.rows()) + " rows but values have " +
                         num(v.rows()));
  }
  if (mask == QueryMask::causal && lq != lk) {
    throw ContractError("causal attention needs equal query and key lengths");
  }
  Var s = ops::scale(ops::block_matmul_nt(q, k, blocks),
                     1.0 / std::sqrt(static_cast<double>(q.cols())));
  if (u < lq) {
    auto keep = choose_queries(s.value(), blocks, u, mask);
    if (trace != nullptr) keep = trace->apply(std::move(keep));
    if (keep.size() != s.rows()) throw ContractError("replayed query selection has wrong size");
    s = ops::zero_rows(s, keep);
  }
  const Var p = mask == QueryMask::causal ? ops::masked_softmax_rows(s, causal_mask(lq), lq)
                                          : ops::softmax_rows(s);
  return ops::block_matmul(p, v, blocks);
}

Var feed_forward(const FeedForwardParams<Var>& p, Var x) {
  const Var hidden = ops::elu(ops::add_row(ops::matmul(x, p.w1), p.b1));
  return ops::add_row(ops::matmul(hidden, p.w2), p.b2);
}

Var norm(const InformerConfig& config, const LayerNormParams<Var>& p, Var x) {
  return ops::layer_norm(x, p.gain, p.bias, config.norm_eps);
}

Var encoder_layer(const InformerConfig& config, const EncoderLayerParams<Var>& p, Var x,
                  std::size_t blocks, SelectionTrace* trace) {
  const std::size_t len = x.rows() / blocks;
  const Var a = multi_head_attention(config, p.attn, x, x, blocks, select_u(len, config.c_factor),
                                     QueryMask::none, trace);
  x = norm(config, p.norm1, ops::add(x, a));
  return norm(config, p.norm2, ops::add(x, feed_forward(p.ffn, x)));
}

AttentionParams<Tensor> init_attention(std::size_t d, random::Engine& rng) {
  AttentionParams<Tensor> p;
  p.wq = random::fan_in_uniform(rng, {d, d}, d);
  p.wk = random::fan_in_uniform(rng, {d, d}, d);
  p.wv = random::fan_in_uniform(rng, {d, d}, d);
  p.wo = random::fan_in_uniform(rng, {d, d}, d);
  return p;
}

LayerNormParams<Tensor> init_norm(std::size_t d) {
  return {Tensor({1, d}, 1.0), Tensor({1, d})};
}

FeedForwardParams<Tensor> init_ffn(std::size_t d, std::size_t width, random::Engine& rng) {
  FeedForwardParams<Tensor> p;
  p.w1 = random::fan_in_uniform(rng, {d, width}, d);
  p.b1 = Tensor({1, width});
  p.w2 = random::fan_in_uniform(rng, {width, d}, width);
  p.b2 = Tensor({1, d});
  return p;
}

}  // namespace

void InformerConfig::validate() const {
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw ValidationError("heads (" + num(heads) + ") must divide d_model (" + num(d_model) + ")");
  }
  if (in_features == 0) throw ValidationError("Informer input width must be positive");
  if (encoder_layers == 0) throw ValidationError("encoder needs at least one attention layer");
  if (replicas >= encoder_layers) {
    throw ValidationError("replicas (" + num(replicas) + ") must be fewer than encoder layers (" +
                          num(encoder_layers) + ")");
  }
  if (decoder_layers == 0) throw ValidationError("decoder needs at least one layer");
  if (horizon == 0) throw ValidationError("forecast horizon must be at least one step");
  const std::size_t unit = std::size_t{1} << (encoder_layers - 1);
  if (input_len == 0 || input_len % unit != 0) {
    throw ValidationError("input length " + num(input_len) + " must be a positive multiple of " +
                          num(unit) + " for " + num(encoder_layers) + " encoder layers");
  }
  if (token_len == 0 || token_len > input_len) {
    throw ValidationError("start token length must be in [1, " + num(input_len) + "]");
  }
  if (!(c_factor > 0.0)) throw ValidationError("ProbSparse factor must be positive");
  if (ffn_multiplier == 0) throw ValidationError("feed-forward multiplier must be positive");
  if (!(norm_eps > 0.0)) throw ValidationError("layer norm epsilon must be positive");
}

std::size_t InformerConfig::feature_len() const {
  return (input_len >> (encoder_layers - 1)) * (replicas + 1);
}

InformerParams<Tensor> init_informer(const InformerConfig& config, random::Engine& rng) {
  config.validate();
  const std::size_t d = config.d_model;
  InformerParams<Tensor> p;
  p.input_w = random::fan_in_uniform(rng, {config.in_features, d}, config.in_features);
  p.input_b = Tensor({1, d});
  p.position = random::fan_in_uniform(rng, {config.input_len + config.horizon, d}, d);
  for (std::size_t r = 0; r <= config.replicas; ++r) {
    EncoderBranchParams<Tensor> branch;
    const std::size_t layers = config.encoder_layers - r;
    for (std::size_t i = 0; i < layers; ++i) {
      branch.layers.push_back({init_attention(d, rng), init_norm(d),
                               init_ffn(d, config.ffn_multiplier * d, rng), init_norm(d)});
      if (i + 1 < layers) {
        branch.distills.push_back(
            {random::fan_in_uniform(rng, {d, d, 3}, 3 * d), Tensor({1, d})});
      }
    }
    p.encoder.push_back(std::move(branch));
  }
  for (std::size_t i = 0; i < config.decoder_layers; ++i) {
    p.decoder.push_back({init_attention(d, rng), init_norm(d), init_attention(d, rng), init_norm(d),
                         init_ffn(d, config.ffn_multiplier * d, rng), init_norm(d)});
  }
  return p;
}

std::vector<std::uint8_t> SelectionTrace::apply(std::vector<std::uint8_t> computed) {
  if (cursor_ < recorded_.size()) return recorded_[cursor_++];
  recorded_.push_back(computed);
  ++cursor_;
  return computed;
}

std::size_t select_u(std::size_t l_q, double c_factor) {
  if (l_q == 0) throw ParameterError("select_u: query length must be positive");
  if (!(c_factor > 0.0)) throw ParameterError("select_u: factor must be positive");
  const double raw = std::ceil(c_factor * std::log(static_cast<double>(l_q)));
  if (raw < 1.0) return 1;
  return raw >= static_cast<double>(l_q) ? l_q : static_cast<std::size_t>(raw);
}

Tensor full_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.cols() != k.cols()) {
    throw DimensionError("attention: queries " + shape_string(q.shape()) + " and keys " +
                         shape_string(k.shape()) + " differ in width");
  }
  Tape tape(false);
  return attention_head(tape.constant(q), tape.constant(k), tape.constant(v), 1, q.rows(),
                        QueryMask::none, nullptr)
      .value();
}

SparsityScore sparsity_measurement(const Tensor& q, const Tensor& k, std::size_t u) {
  if (q.cols() != k.cols()) {
    throw DimensionError("sparsity: queries " + shape_string(q.shape()) + " and keys " +
                         shape_string(k.shape()) + " differ in width");
  }
  if (u == 0 || u > q.rows()) throw ParameterError("sparsity: u must be in [1, l_Q]");
  Tape tape(false);
  const Var scores = ops::scale(ops::matmul_nt(tape.constant(q), tape.constant(k)),
                                1.0 / std::sqrt(static_cast<double>(q.cols())));
  SparsityScore out;
  out.m_bar = Tensor({q.rows()});
  std::vector<double> m(q.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    m[i] = max_minus_mean(scores.value(), i, k.rows());
    out.m_bar[i] = m[i];
  }
  out.top_u = top_indices(m, u);
  return out;
}

Tensor probsparse_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t u) {
  if (u == 0 || u > q.rows()) {
    throw ParameterError("probsparse_attention: u = " + num(u) + " outside [1, " + num(q.rows()) +
                         "]");
  }
  if (q.cols() != k.cols()) {
    throw DimensionError("attention: queries " + shape_string(q.shape()) + " and keys " +
                         shape_string(k.shape()) + " differ in width");
  }
  Tape tape(false);
  return attention_head(tape.constant(q), tape.constant(k), tape.constant(v), 1, u,
                        QueryMask::none, nullptr)
      .value();
}

Var multi_head_attention(const InformerConfig& config, const AttentionParams<Var>& p, Var queries,
                         Var keys_values, std::size_t blocks, std::size_t u, QueryMask mask,
                         SelectionTrace* trace) {
  const Var q = ops::matmul(queries, p.wq);
  const Var k = ops::matmul(keys_values, p.wk);
  const Var v = ops::matmul(keys_values, p.wv);
  const std::size_t dh = config.d_head();
  std::vector<Var> heads;
  heads.reserve(config.heads);
  for (std::size_t h = 0; h < config.heads; ++h) {
    heads.push_back(attention_head(ops::slice_cols(q, h * dh, dh), ops::slice_cols(k, h * dh, dh),
                                   ops::slice_cols(v, h * dh, dh), blocks, u, mask, trace));
  }
  const Var joined = heads.size() == 1 ? heads.front() : ops::concat_cols(heads);
  return ops::matmul(joined, p.wo);
}

Var distill(Var x, const DistillParams<Var>& p, std::size_t blocks) {
  const std::size_t len = block_rows(x, blocks, "distill");
  if (len < 2 || len % 2 != 0) {
    throw ContractError("distill needs an even length of at least 2, got " + num(len));
  }
  const Var conv = ops::add_row(ops::conv1d_time(x, p.kernels, blocks), p.bias);
  return ops::maxpool1d(ops::elu(conv), 3, 2, 1, blocks);
}

Tensor distill(const Tensor& x, const DistillParams<Tensor>& p) {
  Tape tape(false);
  const auto bound = params::bind(tape, p);
  return distill(tape.constant(x), bound, 1).value();
}

Var encode(const InformerConfig& config, const InformerParams<Var>& p, Var x, std::size_t blocks,
           SelectionTrace* trace) {
  const std::size_t len = block_rows(x, blocks, "encode");
  if (p.encoder.empty()) throw ContractError("encoder has no stacks");
  const std::size_t depth = p.encoder.front().layers.size();
  const std::size_t unit = std::size_t{1} << (depth - 1);
  if (len == 0 || len % unit != 0) {
    throw ContractError("encoder input length " + num(len) + " is not divisible by " + num(unit));
  }
  Var feature_map;
  for (std::size_t r = 0; r < p.encoder.size(); ++r) {
    const auto& branch = p.encoder[r];
    if (branch.layers.size() + r != depth || branch.distills.size() + 1 != branch.layers.size()) {
      throw ContractError("encoder stack " + num(r) + " has an inconsistent layer count");
    }
    const std::size_t span = len >> r;
    Var h = r == 0 ? x : ops::slice_rows(x, len - span, span, blocks);
    for (std::size_t i = 0; i < branch.layers.size(); ++i) {
      h = encoder_layer(config, branch.layers[i], h, blocks, trace);
      if (i < branch.distills.size()) h = distill(h, branch.distills[i], blocks);
    }
    feature_map = feature_map.valid() ? ops::concat_rows(feature_map, h, blocks) : h;
  }
  return feature_map;
}

Var decoder_self_attention(const InformerConfig& config, const DecoderLayerParams<Var>& p, Var x,
                           std::size_t blocks, SelectionTrace* trace) {
  const std::size_t len = block_rows(x, blocks, "decoder");
  const Var a = multi_head_attention(config, p.self_attn, x, x, blocks,
                                     select_u(len, config.c_factor), QueryMask::causal, trace);
  return norm(config, p.norm1, ops::add(x, a));
}

Var decode(const InformerConfig& config, const InformerParams<Var>& p, Var x_de, Var feature_map,
           std::size_t blocks, SelectionTrace* trace) {
  const std::size_t len = block_rows(x_de, blocks, "decoder");
  if (len != config.token_len + config.horizon) {
    throw ContractError("decoder input has " + num(len) + " steps, expected " +
                        num(config.token_len) + " + " + num(config.horizon));
  }
  block_rows(feature_map, blocks, "feature map");
  Var x = x_de;
  for (const auto& layer : p.decoder) {
    x = decoder_self_attention(config, layer, x, blocks, trace);
    const Var c = multi_head_attention(config, layer.cross_attn, x, feature_map, blocks, len,
                                       QueryMask::none, trace);
    x = norm(config, layer.norm2, ops::add(x, c));
    x = norm(config, layer.norm3, ops::add(x, feed_forward(layer.ffn, x)));
  }
  return ops::slice_rows(x, config.token_len, config.horizon, blocks);
}

Var informer_forward(const InformerConfig& config, const InformerParams<Var>& p, Var x,
                     std::size_t blocks, Var block_embedding, SelectionTrace* trace) {
  const std::size_t e = config.input_len, f = config.horizon, lt = config.token_len;
  if (blocks == 0 || x.rows() != blocks * e || x.cols() != config.in_features) {
    throw DimensionError("Informer input " + shape_string(x.shape()) + " does not match " +
                         num(blocks) + " sequences of " + num(e) + "×" + num(config.in_features));
  }
  Tape& tape = *x.tape;
  const Var h = ops::add_row(ops::matmul(x, p.input_w), p.input_b);
  Var enc = ops::add_tiled(h, ops::slice_rows(p.position, 0, e));
  if (block_embedding.valid()) enc = ops::add_repeated(enc, block_embedding);
  const Var feature_map = encode(config, p, enc, blocks, trace);

  const Var token = ops::slice_rows(h, e - lt, lt, blocks);
  const Var placeholder = tape.constant(Tensor({blocks * f, config.d_model}));
  Var dec = ops::concat_rows(token, placeholder, blocks);
  dec = ops::add_tiled(dec, ops::slice_rows(p.position, e - lt, lt + f));
  if (block_embedding.valid()) dec = ops::add_repeated(dec, block_embedding);
  return decode(config, p, dec, feature_map, blocks, trace);
}

Tensor DecoderInput::concatenated() const {
  if (token.cols() != placeholder.cols()) {
    throw DimensionError("decoder token and placeholder widths differ");
  }
  Tensor out({token.rows() + placeholder.rows(), token.cols()});
  std::copy(token.storage().begin(), token.storage().end(), out.storage().begin());
  std::copy(placeholder.storage().begin(), placeholder.storage().end(),
            out.storage().begin() + static_cast<std::ptrdiff_t>(token.size()));
  return out;
}

DecoderInput make_decoder_input(const Tensor& encoder_input, std::size_t token_len,
                                std::size_t horizon) {
  const std::size_t len = encoder_input.rows(), d = encoder_input.cols();
  if (token_len == 0 || token_len > len) {
    throw ContractError("start token length " + num(token_len) + " exceeds input length " +
                        num(len));
  }
  DecoderInput in;
  in.token = Tensor({token_len, d});
  std::copy(encoder_input.storage().begin() + static_cast<std::ptrdiff_t>((len - token_len) * d),
            encoder_input.storage().end(), in.token.storage().begin());
  in.placeholder = Tensor({horizon, d});
  return in;
}

Tensor encode(const Tensor& x, const InformerConfig& config, const InformerParams<Tensor>& p) {
  Tape tape(false);
  const auto bound = params::bind(tape, p);
  return encode(config, bound, tape.constant(x), 1, nullptr).value();
}

Tensor decode(const DecoderInput& input, const Tensor& feature_map, const InformerConfig& config,
              const InformerParams<Tensor>& p) {
  Tape tape(false);
  const auto bound = params::bind(tape, p);
  return decode(config, bound, tape.constant(input.concatenated()), tape.constant(feature_map), 1,
                nullptr)
      .value();
}

}  // namespace stgin

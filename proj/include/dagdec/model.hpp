#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>

#include "dagdec/dag.hpp"
#include "dagdec/glancing.hpp"
#include "dagdec/nn.hpp"

namespace dagdec {

struct ModelConfig {
  int model_dim = 64;
  int num_heads = 2;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int ffn_dim = 128;
  int vocab_size = 0;
  int lambda = 4;          // graph-size multiplier: L = lambda * source length
  int max_source_len = 16;
  double dropout_rate = 0.1;
  uint64_t seed = 1;

  void check() const;  // throws ConfigError
};

/// Transformer encoder plus a decoder that arranges its hidden states as the
/// vertices of a DAG: graph positional embeddings in, unmasked self-attention
/// and cross-attention over the stack, then a transition head
/// E = row-softmax(QK^T / sqrt(d)) restricted to strictly increasing vertex
/// pairs and a token head P = row-softmax(V W_P^T).
class Model {
 public:
  struct EncoderTrace {
    std::vector<int> source;
    Mat input;
    nn::DropoutMask in_drop;
    std::vector<nn::EncoderBlock::Cache> blocks;
    nn::LayerNorm::Cache final_ln;
    Mat output;
  };

  struct DecoderTrace {
    std::vector<int> z;  // glancing input; empty when absent
    Mat input;
    nn::DropoutMask in_drop;
    std::vector<nn::DecoderBlock::Cache> blocks;
    nn::LayerNorm::Cache final_ln;
    Mat states;       // vertex states V, L x d
    Mat trans_q, trans_k;
    Mat trans_probs;  // exp(log E), for the softmax backward
    Mat token_probs;  // exp(log P)
  };

  struct Trace {
    EncoderTrace enc;
    DecoderTrace dec;
  };

  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return ps_; }
  const nn::ParamStore& params() const { return ps_; }

  /// L for a source of length n: lambda * n, clamped to the graph-positional
  /// table size.
  int graph_size_for(int source_len) const;

  /// Standard transformer encoder; N x d states. Throws LengthError when the
  /// source exceeds max_source_len.
  Mat encode(std::span<const int> source, bool training = false, Rng* rng = nullptr,
             EncoderTrace* trace = nullptr);

  /// Decodes the DAG from encoder states. Non-masked glancing entries add
  /// their token embedding at the vertex; masked entries add nothing.
  Dag decode_dag(const Mat& encoder_states, int graph_size,
                 const GlancingInput* glancing = nullptr, bool training = false,
                 Rng* rng = nullptr, DecoderTrace* trace = nullptr);

  /// encode + decode_dag with L = graph_size_for(|source|).
  Dag forward(std::span<const int> source, const GlancingInput* glancing = nullptr,
              bool training = false, Rng* rng = nullptr, Trace* trace = nullptr);

  /// Reverse-mode pass from gradients w.r.t. log P and log E (free-parameter
  /// convention, zero on masked entries); accumulates into params().grad.
  void backward(const Trace& trace, const Mat& d_log_probs, const Mat& d_log_trans);

 private:
  Mat decoder_input(int graph_size, const GlancingInput* glancing) const;

  ModelConfig cfg_;
  nn::ParamStore ps_;
  int tok_emb_ = -1;    // (vocab, d), shared by the encoder input and glancing
  int src_pos_ = -1;    // (max_source_len, d)
  int graph_pos_ = -1;  // (lambda * max_source_len, d)
  std::vector<nn::EncoderBlock> enc_blocks_;
  nn::LayerNorm enc_final_;
  std::vector<nn::DecoderBlock> dec_blocks_;
  nn::LayerNorm dec_final_;
  nn::Linear trans_q_, trans_k_;  // W_Q, W_K (no bias)
  nn::Linear token_proj_;         // W_P (no bias)
};

/// Checkpoint container: magic, format version, config as key=value text,
/// then named arrays (row-major little-endian doubles). Round-trips bit-exactly.
void save_checkpoint(const Model& model, long long step, const std::string& path);

struct LoadedModel {
  std::unique_ptr<Model> model;
  long long step = 0;
};
LoadedModel load_checkpoint(const std::string& path);

}  // namespace dagdec

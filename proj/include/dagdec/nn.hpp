#pragma once

#include <string>
#include <vector>

#include "dagdec/dag.hpp"
#include "dagdec/rng.hpp"

namespace dagdec::nn {

/// Named parameter registry. Gradients live next to the values; iteration
/// order is creation order, which fixes the optimizer update order and the
/// checkpoint layout.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Mat value;
    Mat grad;
  };

  int add(const std::string& name, int rows, int cols);
  Entry& at(int handle) { return entries_[static_cast<size_t>(handle)]; }
  const Entry& at(int handle) const { return entries_[static_cast<size_t>(handle)]; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();
  long long param_count() const;

 private:
  std::vector<Entry> entries_;
};

// Row-wise softmax / log-softmax helpers.
Mat softmax_rows(const Mat& logits);
/// dlogits for y = softmax(logits): a * (da - rowwise_dot(da, a)).
Mat softmax_backward(const Mat& probs, const Mat& dprobs);

/// Inverted-dropout mask; empty when inactive.
struct DropoutMask {
  Mat scale;
  bool active = false;
};
Mat dropout_forward(const Mat& x, double rate, Rng* rng, DropoutMask* mask);
Mat dropout_backward(const Mat& dy, const DropoutMask& mask);

struct Linear {
  int w = -1;  // (out, in)
  int b = -1;  // (1, out); -1 when the layer has no bias

  static Linear create(ParamStore& ps, const std::string& name, int in, int out,
                       bool bias, Rng& rng);
  Mat forward(const ParamStore& ps, const Mat& x) const;
  /// Accumulates weight gradients; returns dx.
  Mat backward(ParamStore& ps, const Mat& x, const Mat& dy) const;
};

struct LayerNorm {
  int gamma = -1;
  int beta = -1;
  static constexpr double kEps = 1e-5;

  struct Cache {
    Mat xhat;
    Vec rstd;
  };

  static LayerNorm create(ParamStore& ps, const std::string& name, int dim);
  Mat forward(const ParamStore& ps, const Mat& x, Cache* cache) const;
  Mat backward(ParamStore& ps, const Cache& cache, const Mat& dy) const;
};

struct MultiHeadAttention {
  Linear wq, wk, wv, wo;
  int heads = 1;
  int dim = 0;

  struct Cache {
    Mat xq, xkv;
    Mat q, k, v;
    std::vector<Mat> att;  // per-head attention weights
    Mat ctx;
  };

  static MultiHeadAttention create(ParamStore& ps, const std::string& name, int dim,
                                   int heads, Rng& rng);
  Mat forward(const ParamStore& ps, const Mat& xq, const Mat& xkv, Cache* cache) const;
  /// Accumulates into dxq and dxkv (pass the same matrix twice for self-attention).
  void backward(ParamStore& ps, const Cache& cache, const Mat& dy, Mat& dxq,
                Mat& dxkv) const;
};

struct FeedForward {
  Linear lin1, lin2;

  struct Cache {
    Mat x, pre, h;
  };

  static FeedForward create(ParamStore& ps, const std::string& name, int dim,
                            int hidden, Rng& rng);
  Mat forward(const ParamStore& ps, const Mat& x, Cache* cache) const;
  Mat backward(ParamStore& ps, const Cache& cache, const Mat& dy) const;
};

/// Pre-norm block: x + Drop(Self(LN(x))), then x + Drop(FFN(LN(x))).
struct EncoderBlock {
  LayerNorm ln1, ln2;
  MultiHeadAttention self;
  FeedForward ffn;

  struct Cache {
    Mat x;
    LayerNorm::Cache ln1c, ln2c;
    Mat n1;
    MultiHeadAttention::Cache selfc;
    DropoutMask drop1, drop2;
    Mat a;  // after the attention residual
    Mat n2;
    FeedForward::Cache ffnc;
  };

  static EncoderBlock create(ParamStore& ps, const std::string& name, int dim, int heads,
                             int ffn_dim, Rng& rng);
  Mat forward(const ParamStore& ps, const Mat& x, double dropout, Rng* rng,
              Cache* cache) const;
  Mat backward(ParamStore& ps, const Cache& cache, const Mat& dy) const;
};

/// Pre-norm block with unmasked self-attention over vertices, cross-attention
/// to the encoder states, then the feed-forward sublayer.
struct DecoderBlock {
  LayerNorm ln1, ln2, ln3;
  MultiHeadAttention self, cross;
  FeedForward ffn;

  struct Cache {
    Mat x;
    LayerNorm::Cache ln1c, ln2c, ln3c;
    Mat n1, n2, n3;
    MultiHeadAttention::Cache selfc, crossc;
    DropoutMask drop1, drop2, drop3;
    Mat a, c;
    FeedForward::Cache ffnc;
  };

  static DecoderBlock create(ParamStore& ps, const std::string& name, int dim, int heads,
                             int ffn_dim, Rng& rng);
  Mat forward(const ParamStore& ps, const Mat& x, const Mat& enc, double dropout,
              Rng* rng, Cache* cache) const;
  /// Returns dx; adds the cross-attention contribution into d_enc.
  Mat backward(ParamStore& ps, const Cache& cache, const Mat& dy, Mat& d_enc) const;
};

/// Adam with decoupled weight decay; LN scales/offsets and biases are not
/// decayed. Moment buffers are allocated on first use.
class Adam {
 public:
  struct Config {
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-9;
    double weight_decay = 0.0;
  };

  explicit Adam(Config cfg) : cfg_(cfg) {}
  void step(ParamStore& ps, double lr);

 private:
  Config cfg_;
  long long t_ = 0;
  std::vector<Mat> m_, v_;
};

}  // namespace dagdec::nn

#include "dagdec/nn.hpp"

#include <cmath>

#include "dagdec/errors.hpp"

namespace dagdec::nn {

int ParamStore::add(const std::string& name, int rows, int cols) {
  for (const auto& e : entries_)
    if (e.name == name) throw ConfigError("duplicate parameter name " + name);
  Entry e;
  e.name = name;
  e.value = Mat::Zero(rows, cols);
  e.grad = Mat::Zero(rows, cols);
  entries_.push_back(std::move(e));
  return static_cast<int>(entries_.size()) - 1;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.grad.setZero();
}

long long ParamStore::param_count() const {
  long long n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

Mat softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

Mat softmax_backward(const Mat& probs, const Mat& dprobs) {
  Mat dlogits(probs.rows(), probs.cols());
  for (int i = 0; i < probs.rows(); ++i) {
    const double dot = probs.row(i).dot(dprobs.row(i));
    dlogits.row(i) = probs.row(i).array() * (dprobs.row(i).array() - dot);
  }
  return dlogits;
}

Mat dropout_forward(const Mat& x, double rate, Rng* rng, DropoutMask* mask) {
  if (rng == nullptr || rate <= 0.0) {
    if (mask) mask->active = false;
    return x;
  }
  const double keep = 1.0 - rate;
  Mat scale(x.rows(), x.cols());
  // row-major draw order, independent of Eigen's storage layout
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j)
      scale(i, j) = rng->uniform() >= rate ? 1.0 / keep : 0.0;
  if (mask) {
    mask->scale = scale;
    mask->active = true;
  }
  return x.cwiseProduct(scale);
}

Mat dropout_backward(const Mat& dy, const DropoutMask& mask) {
  return mask.active ? dy.cwiseProduct(mask.scale).eval() : dy;
}

Linear Linear::create(ParamStore& ps, const std::string& name, int in, int out,
                      bool bias, Rng& rng) {
  Linear l;
  l.w = ps.add(name + ".weight", out, in);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  Mat& w = ps.at(l.w).value;
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
  if (bias) l.b = ps.add(name + ".bias", 1, out);
  return l;
}

Mat Linear::forward(const ParamStore& ps, const Mat& x) const {
  Mat y = x * ps.at(w).value.transpose();
  if (b >= 0) y.rowwise() += ps.at(b).value.row(0);
  return y;
}

Mat Linear::backward(ParamStore& ps, const Mat& x, const Mat& dy) const {
  ps.at(w).grad.noalias() += dy.transpose() * x;
  if (b >= 0) ps.at(b).grad.row(0) += dy.colwise().sum();
  return dy * ps.at(w).value;
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& name, int dim) {
  LayerNorm ln;
  ln.gamma = ps.add(name + ".gamma", 1, dim);
  ln.beta = ps.add(name + ".beta", 1, dim);
  ps.at(ln.gamma).value.setOnes();
  return ln;
}

Mat LayerNorm::forward(const ParamStore& ps, const Mat& x, Cache* cache) const {
  const int n = static_cast<int>(x.rows());
  Mat xhat(x.rows(), x.cols());
  Vec rstd(n);
  for (int i = 0; i < n; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    rstd(i) = 1.0 / std::sqrt(var + kEps);
    xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
  }
  Mat y = xhat.array().rowwise() * ps.at(gamma).value.row(0).array();
  y.rowwise() += ps.at(beta).value.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

Mat LayerNorm::backward(ParamStore& ps, const Cache& cache, const Mat& dy) const {
  ps.at(gamma).grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  ps.at(beta).grad.row(0) += dy.colwise().sum();
  const Mat g = dy.array().rowwise() * ps.at(gamma).value.row(0).array();
  Mat dx(dy.rows(), dy.cols());
  for (int i = 0; i < dy.rows(); ++i) {
    const double mean_g = g.row(i).mean();
    const double mean_gx = (g.row(i).array() * cache.xhat.row(i).array()).mean();
    dx.row(i) =
        cache.rstd(i) * (g.row(i).array() - mean_g - cache.xhat.row(i).array() * mean_gx);
  }
  return dx;
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& ps, const std::string& name,
                                              int dim, int heads, Rng& rng) {
  MultiHeadAttention a;
  a.heads = heads;
  a.dim = dim;
  a.wq = Linear::create(ps, name + ".wq", dim, dim, true, rng);
  a.wk = Linear::create(ps, name + ".wk", dim, dim, true, rng);
  a.wv = Linear::create(ps, name + ".wv", dim, dim, true, rng);
  a.wo = Linear::create(ps, name + ".wo", dim, dim, true, rng);
  return a;
}

Mat MultiHeadAttention::forward(const ParamStore& ps, const Mat& xq, const Mat& xkv,
                                Cache* cache) const {
  const int dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat q = wq.forward(ps, xq);
  Mat k = wk.forward(ps, xkv);
  Mat v = wv.forward(ps, xkv);
  Mat ctx(xq.rows(), dim);
  std::vector<Mat> att(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const auto qh = q.middleCols(h * dh, dh);
    const auto kh = k.middleCols(h * dh, dh);
    const auto vh = v.middleCols(h * dh, dh);
    att[static_cast<size_t>(h)] = softmax_rows(qh * kh.transpose() * scale);
    ctx.middleCols(h * dh, dh) = att[static_cast<size_t>(h)] * vh;
  }
  Mat out = wo.forward(ps, ctx);
  if (cache) {
    cache->xq = xq;
    cache->xkv = xkv;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->att = std::move(att);
    cache->ctx = std::move(ctx);
  }
  return out;
}

void MultiHeadAttention::backward(ParamStore& ps, const Cache& cache, const Mat& dy,
                                  Mat& dxq, Mat& dxkv) const {
  const int dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Mat dctx = wo.backward(ps, cache.ctx, dy);
  Mat dq(cache.q.rows(), dim), dk(cache.k.rows(), dim), dv(cache.v.rows(), dim);
  for (int h = 0; h < heads; ++h) {
    const auto qh = cache.q.middleCols(h * dh, dh);
    const auto kh = cache.k.middleCols(h * dh, dh);
    const auto vh = cache.v.middleCols(h * dh, dh);
    const Mat& a = cache.att[static_cast<size_t>(h)];
    const auto dctx_h = dctx.middleCols(h * dh, dh);
    const Mat da = dctx_h * vh.transpose();
    dv.middleCols(h * dh, dh) = a.transpose() * dctx_h;
    const Mat ds = softmax_backward(a, da);
    dq.middleCols(h * dh, dh) = ds * kh * scale;
    dk.middleCols(h * dh, dh) = ds.transpose() * qh * scale;
  }
  dxq += wq.backward(ps, cache.xq, dq);
  dxkv += wk.backward(ps, cache.xkv, dk);
  dxkv += wv.backward(ps, cache.xkv, dv);
}

FeedForward FeedForward::create(ParamStore& ps, const std::string& name, int dim,
                                int hidden, Rng& rng) {
  FeedForward f;
  f.lin1 = Linear::create(ps, name + ".lin1", dim, hidden, true, rng);
  f.lin2 = Linear::create(ps, name + ".lin2", hidden, dim, true, rng);
  return f;
}

Mat FeedForward::forward(const ParamStore& ps, const Mat& x, Cache* cache) const {
  Mat pre = lin1.forward(ps, x);
  Mat h = pre.cwiseMax(0.0);
  Mat y = lin2.forward(ps, h);
  if (cache) {
    cache->x = x;
    cache->pre = std::move(pre);
    cache->h = std::move(h);
  }
  return y;
}

Mat FeedForward::backward(ParamStore& ps, const Cache& cache, const Mat& dy) const {
  Mat dh = lin2.backward(ps, cache.h, dy);
  dh = (cache.pre.array() > 0.0).select(dh, 0.0);
  return lin1.backward(ps, cache.x, dh);
}

EncoderBlock EncoderBlock::create(ParamStore& ps, const std::string& name, int dim,
                                  int heads, int ffn_dim, Rng& rng) {
  EncoderBlock b;
  b.ln1 = LayerNorm::create(ps, name + ".ln1", dim);
  b.self = MultiHeadAttention::create(ps, name + ".self", dim, heads, rng);
  b.ln2 = LayerNorm::create(ps, name + ".ln2", dim);
  b.ffn = FeedForward::create(ps, name + ".ffn", dim, ffn_dim, rng);
  return b;
}

Mat EncoderBlock::forward(const ParamStore& ps, const Mat& x, double dropout, Rng* rng,
                          Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  c.x = x;
  c.n1 = ln1.forward(ps, x, cache ? &c.ln1c : nullptr);
  const Mat att = self.forward(ps, c.n1, c.n1, cache ? &c.selfc : nullptr);
  c.a = x + dropout_forward(att, dropout, rng, cache ? &c.drop1 : nullptr);
  c.n2 = ln2.forward(ps, c.a, cache ? &c.ln2c : nullptr);
  const Mat f = ffn.forward(ps, c.n2, cache ? &c.ffnc : nullptr);
  return c.a + dropout_forward(f, dropout, rng, cache ? &c.drop2 : nullptr);
}

Mat EncoderBlock::backward(ParamStore& ps, const Cache& cache, const Mat& dy) const {
  Mat da = dy;
  const Mat df = dropout_backward(dy, cache.drop2);
  da += ln2.backward(ps, cache.ln2c, ffn.backward(ps, cache.ffnc, df));
  Mat dx = da;
  const Mat datt = dropout_backward(da, cache.drop1);
  Mat dn1 = Mat::Zero(dy.rows(), dy.cols());
  self.backward(ps, cache.selfc, datt, dn1, dn1);
  dx += ln1.backward(ps, cache.ln1c, dn1);
  return dx;
}

DecoderBlock DecoderBlock::create(ParamStore& ps, const std::string& name, int dim,
                                  int heads, int ffn_dim, Rng& rng) {
  DecoderBlock b;
  b.ln1 = LayerNorm::create(ps, name + ".ln1", dim);
  b.self = MultiHeadAttention::create(ps, name + ".self", dim, heads, rng);
  b.ln2 = LayerNorm::create(ps, name + ".ln2", dim);
  b.cross = MultiHeadAttention::create(ps, name + ".cross", dim, heads, rng);
  b.ln3 = LayerNorm::create(ps, name + ".ln3", dim);
  b.ffn = FeedForward::create(ps, name + ".ffn", dim, ffn_dim, rng);
  return b;
}

Mat DecoderBlock::forward(const ParamStore& ps, const Mat& x, const Mat& enc,
                          double dropout, Rng* rng, Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  c.x = x;
  c.n1 = ln1.forward(ps, x, cache ? &c.ln1c : nullptr);
  const Mat att = self.forward(ps, c.n1, c.n1, cache ? &c.selfc : nullptr);
  c.a = x + dropout_forward(att, dropout, rng, cache ? &c.drop1 : nullptr);
  c.n2 = ln2.forward(ps, c.a, cache ? &c.ln2c : nullptr);
  const Mat xatt = cross.forward(ps, c.n2, enc, cache ? &c.crossc : nullptr);
  c.c = c.a + dropout_forward(xatt, dropout, rng, cache ? &c.drop2 : nullptr);
  c.n3 = ln3.forward(ps, c.c, cache ? &c.ln3c : nullptr);
  const Mat f = ffn.forward(ps, c.n3, cache ? &c.ffnc : nullptr);
  return c.c + dropout_forward(f, dropout, rng, cache ? &c.drop3 : nullptr);
}

Mat DecoderBlock::backward(ParamStore& ps, const Cache& cache, const Mat& dy,
                           Mat& d_enc) const {
  Mat dc = dy;
  const Mat df = dropout_backward(dy, cache.drop3);
  dc += ln3.backward(ps, cache.ln3c, ffn.backward(ps, cache.ffnc, df));

  Mat da = dc;
  const Mat dxatt = dropout_backward(dc, cache.drop2);
  Mat dn2 = Mat::Zero(dy.rows(), dy.cols());
  cross.backward(ps, cache.crossc, dxatt, dn2, d_enc);
  da += ln2.backward(ps, cache.ln2c, dn2);

  Mat dx = da;
  const Mat datt = dropout_backward(da, cache.drop1);
  Mat dn1 = Mat::Zero(dy.rows(), dy.cols());
  self.backward(ps, cache.selfc, datt, dn1, dn1);
  dx += ln1.backward(ps, cache.ln1c, dn1);
  return dx;
}

void Adam::step(ParamStore& ps, double lr) {
  auto& entries = ps.entries();
  if (m_.empty()) {
    for (const auto& e : entries) {
      m_.push_back(Mat::Zero(e.value.rows(), e.value.cols()));
      v_.push_back(Mat::Zero(e.value.rows(), e.value.cols()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * e.grad;
    v_[i] = cfg_.beta2 * v_[i].array() + (1.0 - cfg_.beta2) * e.grad.array().square();
    const Mat mhat = m_[i] / bc1;
    const Mat vhat = v_[i] / bc2;
    Mat update = mhat.array() / (vhat.array().sqrt() + cfg_.eps);
    const bool decay = cfg_.weight_decay > 0.0 && e.name.find(".gamma") == std::string::npos &&
                       e.name.find(".beta") == std::string::npos &&
                       e.name.find(".bias") == std::string::npos;
    if (decay) update += cfg_.weight_decay * e.value;
    e.value -= lr * update;
  }
}

}  // namespace dagdec::nn

#include "dagdec/dp.hpp"

#include <cmath>
#include <sstream>

#include "dagdec/errors.hpp"

namespace dagdec {

namespace {

void check_target(const Dag& dag, std::span<const int> target) {
  const int L = dag.graph_size;
  const int M = static_cast<int>(target.size());
  if (M > L) {
    std::ostringstream os;
    os << "target length " << M << " exceeds graph size " << L;
    throw LengthError(os.str());
  }
  if (M < 1 || (M == 1 && L != 1)) {
    std::ostringstream os;
    os << "target length " << M << " is invalid for graph size " << L
       << " (need 2 <= M <= L, or M = L = 1)";
    throw LengthError(os.str());
  }
  for (int i = 0; i < M; ++i) {
    if (target[i] < 0 || target[i] >= dag.vocab_size) {
      std::ostringstream os;
      os << "token index " << target[i] << " at position " << (i + 1)
         << " is outside the vocabulary of size " << dag.vocab_size;
      throw VocabError(os.str());
    }
  }
}

Mat forward_table(const Dag& dag, std::span<const int> target) {
  const int L = dag.graph_size;
  const int M = static_cast<int>(target.size());
  Mat f = Mat::Constant(M, L, kNegInf);
  f(0, 0) = dag.log_probs(0, target[0]);
  for (int i = 1; i < M; ++i) {
    for (int u = 1; u < L; ++u) {
      const double emit = dag.log_probs(u, target[i]);
      if (emit == kNegInf) continue;
      // logsumexp over predecessors, max-shifted
      double mx = kNegInf;
      for (int v = 0; v < u; ++v)
        mx = std::max(mx, f(i - 1, v) + dag.log_trans(v, u));
      if (mx == kNegInf) continue;
      double s = 0.0;
      for (int v = 0; v < u; ++v) {
        const double t = f(i - 1, v) + dag.log_trans(v, u);
        if (t != kNegInf) s += std::exp(t - mx);
      }
      f(i, u) = emit + mx + std::log(s);
    }
  }
  return f;
}

}  // namespace

Mat backward_dp(const Dag& dag, std::span<const int> target) {
  check_target(dag, target);
  const int L = dag.graph_size;
  const int M = static_cast<int>(target.size());
  Mat b = Mat::Constant(M, L, kNegInf);
  b(M - 1, L - 1) = 0.0;
  for (int i = M - 2; i >= 0; --i) {
    for (int u = 0; u < L - 1; ++u) {
      double mx = kNegInf;
      for (int w = u + 1; w < L; ++w) {
        const double t = dag.log_trans(u, w) + dag.log_probs(w, target[i + 1]) + b(i + 1, w);
        mx = std::max(mx, t);
      }
      if (mx == kNegInf) continue;
      double s = 0.0;
      for (int w = u + 1; w < L; ++w) {
        const double t = dag.log_trans(u, w) + dag.log_probs(w, target[i + 1]) + b(i + 1, w);
        if (t != kNegInf) s += std::exp(t - mx);
      }
      b(i, u) = mx + std::log(s);
    }
  }
  return b;
}

MarginalResult loss_marginal(const Dag& dag, std::span<const int> target) {
  check_target(dag, target);
  const int M = static_cast<int>(target.size());
  DpTables tables;
  tables.f = forward_table(dag, target);
  tables.log_likelihood = tables.f(M - 1, dag.graph_size - 1);
  if (tables.log_likelihood == kNegInf)
    throw DegenerateError("target has zero likelihood under the DAG");
  tables.b = backward_dp(dag, target);
  return {-tables.log_likelihood, std::move(tables)};
}

MaxResult loss_max(const Dag& dag, std::span<const int> target) {
  check_target(dag, target);
  const int L = dag.graph_size;
  const int M = static_cast<int>(target.size());

  Mat f = Mat::Constant(M, L, kNegInf);
  f(0, 0) = dag.log_probs(0, target[0]);
  for (int i = 1; i < M; ++i) {
    for (int u = 1; u < L; ++u) {
      const double emit = dag.log_probs(u, target[i]);
      if (emit == kNegInf) continue;
      double best = kNegInf;
      for (int v = 0; v < u; ++v)
        best = std::max(best, f(i - 1, v) + dag.log_trans(v, u));
      if (best == kNegInf) continue;
      f(i, u) = emit + best;
    }
  }
  const double best_ll = f(M - 1, L - 1);
  if (best_ll == kNegInf)
    throw DegenerateError("target has zero likelihood under the DAG");

  // Backtrack; the ascending scan with strict improvement keeps the
  // smallest maximizing predecessor.
  Path path(M);
  path[M - 1] = L;
  for (int i = M - 1; i >= 1; --i) {
    const int u = path[i] - 1;
    int best_v = -1;
    double best = kNegInf;
    for (int v = 0; v < u; ++v) {
      const double t = f(i - 1, v) + dag.log_trans(v, u);
      if (t > best) {
        best = t;
        best_v = v;
      }
    }
    path[i - 1] = best_v + 1;
  }
  return {-best_ll, std::move(path)};
}

Posteriors posteriors_from(const Dag& dag, std::span<const int> target,
                           const DpTables& tables) {
  const int L = dag.graph_size;
  const int M = static_cast<int>(target.size());
  const double ll = tables.log_likelihood;
  if (ll == kNegInf)
    throw DegenerateError("target has zero likelihood under the DAG");

  Posteriors post;
  post.log_likelihood = ll;
  post.gamma = Mat::Zero(M, L);
  for (int i = 0; i < M; ++i)
    for (int u = 0; u < L; ++u) {
      const double t = tables.f(i, u) + tables.b(i, u);
      post.gamma(i, u) = t == kNegInf ? 0.0 : std::exp(t - ll);
    }
  post.xi.reserve(M > 0 ? M - 1 : 0);
  for (int i = 1; i < M; ++i) {
    Mat xi = Mat::Zero(L, L);
    for (int u = 1; u < L; ++u) {
      const double tail = dag.log_probs(u, target[i]) + tables.b(i, u);
      if (tail == kNegInf) continue;
      for (int v = 0; v < u; ++v) {
        const double t = tables.f(i - 1, v) + dag.log_trans(v, u) + tail;
        if (t != kNegInf) xi(v, u) = std::exp(t - ll);
      }
    }
    post.xi.push_back(std::move(xi));
  }
  return post;
}

Posteriors posteriors(const Dag& dag, std::span<const int> target) {
  const auto result = loss_marginal(dag, target);
  return posteriors_from(dag, target, result.tables);
}

DpGrad loss_grad_from(const Dag& dag, std::span<const int> target,
                      const DpTables& tables) {
  const int L = dag.graph_size;
  const int M = static_cast<int>(target.size());
  const double ll = tables.log_likelihood;
  if (ll == kNegInf)
    throw DegenerateError("target has zero likelihood under the DAG");

  DpGrad grad;
  grad.d_log_probs = Mat::Zero(L, dag.vocab_size);
  grad.d_log_trans = Mat::Zero(L, L);
  for (int i = 0; i < M; ++i) {
    for (int u = 0; u < L; ++u) {
      const double t = tables.f(i, u) + tables.b(i, u);
      if (t != kNegInf) grad.d_log_probs(u, target[i]) -= std::exp(t - ll);
    }
  }
  for (int i = 1; i < M; ++i) {
    for (int u = 1; u < L; ++u) {
      const double tail = dag.log_probs(u, target[i]) + tables.b(i, u);
      if (tail == kNegInf) continue;
      for (int v = 0; v < u; ++v) {
        const double t = tables.f(i - 1, v) + dag.log_trans(v, u) + tail;
        if (t != kNegInf) grad.d_log_trans(v, u) -= std::exp(t - ll);
      }
    }
  }
  return grad;
}

DpGrad loss_grad(const Dag& dag, std::span<const int> target) {
  const auto result = loss_marginal(dag, target);
  return loss_grad_from(dag, target, result.tables);
}

}  // namespace dagdec

#pragma once

#include <span>
#include <vector>

#include "dagdec/dag.hpp"

namespace dagdec {

/// Forward/backward tables for one (dag, target) pair, log space.
///
/// f(i, u) = log of the probability sum of all path prefixes that end at
/// vertex u and emit the target prefix y_1..y_i. b(i, u) is the suffix
/// analogue. Row/column storage is 0-based; the math is 1-based.
///
/// Boundary: f(1, 1) = log P[1][y_1], f(1, u>1) = -inf;
///           b(M, L) = 0, b(M, u<L) = -inf.
/// For every i, logsumexp_u(f(i, u) + b(i, u)) equals log_likelihood.
struct DpTables {
  Mat f;                  // M x L
  Mat b;                  // M x L
  double log_likelihood;  // f(M, L)
};

/// Path posteriors given the target. gamma(i, u) is the total posterior
/// weight of paths whose i-th vertex is u; xi[i-2](v, u) is the posterior
/// weight of paths transiting v -> u between positions i-1 and i (i >= 2).
struct Posteriors {
  Mat gamma;             // M x L, rows sum to 1
  std::vector<Mat> xi;   // (M-1) matrices of shape L x L
  double log_likelihood;
};

struct MarginalResult {
  double loss;      // -log sum over all paths of P(Y, A)
  DpTables tables;
};

struct MaxResult {
  double loss;      // -log max over paths of P(Y, A)
  Path best_path;   // 1-based vertices; ties toward the smaller predecessor
};

/// Gradients of the marginal loss with respect to the free log-parameters.
struct DpGrad {
  Mat d_log_probs;  // L x |V|
  Mat d_log_trans;  // L x L (zero on masked entries)
};

/// Exact marginal negative log-likelihood via the O(M L^2) forward
/// recursion f(i, u) = log P[u][y_i] + logsumexp_{v<u}(f(i-1, v) + log E[v][u]).
/// Throws LengthError unless 2 <= M <= L (or M = L = 1), VocabError for an
/// out-of-range token, DegenerateError if the target is unreachable.
MarginalResult loss_marginal(const Dag& dag, std::span<const int> target);

/// Max-product (Viterbi) variant with backtracking.
MaxResult loss_max(const Dag& dag, std::span<const int> target);

/// Suffix recursion b(i, u) = logsumexp_{u'>u}(log E[u][u'] + log P[u'][y_{i+1}] + b(i+1, u')).
Mat backward_dp(const Dag& dag, std::span<const int> target);

Posteriors posteriors(const Dag& dag, std::span<const int> target);
Posteriors posteriors_from(const Dag& dag, std::span<const int> target,
                           const DpTables& tables);

/// d loss / d log P[u][w] = -sum_i gamma(i, u) [y_i = w]
/// d loss / d log E[v][u] = -sum_{i>=2} xi(i, v -> u)
DpGrad loss_grad(const Dag& dag, std::span<const int> target);
DpGrad loss_grad_from(const Dag& dag, std::span<const int> target,
                      const DpTables& tables);

}  // namespace dagdec

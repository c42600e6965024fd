#include "dagdec/glancing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dagdec/dp.hpp"
#include "dagdec/errors.hpp"

namespace dagdec {

namespace {

// First t entries of a seeded partial Fisher-Yates shuffle of [0, m).
std::vector<int> sample_positions(int m, int t, Rng& rng) {
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < t; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(m - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(t);
  return idx;
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

}  // namespace

Path assign_targets(const Dag& dag, std::span<const int> target) {
  return loss_max(dag, target).best_path;
}

int reveal_count(std::span<const int> target, std::span<const int> predicted, double tau) {
  int mismatches = 0;
  for (size_t i = 0; i < target.size(); ++i)
    if (target[i] != predicted[i]) ++mismatches;
  return round_half_up(tau * mismatches);
}

GlancingInput build_glancing_input(const Dag& dag, std::span<const int> target,
                                   const MaskStrategy& strategy, Rng& rng) {
  const int L = dag.graph_size;
  const int M = static_cast<int>(target.size());

  GlancingInput out;
  out.z.assign(L, kMaskedToken);
  if (strategy.variant == Masking::AllMasked) return out;

  out.assignment = assign_targets(dag, target);

  int t = 0;
  if (strategy.variant == Masking::Adaptive) {
    std::vector<int> predicted(M);
    for (int i = 0; i < M; ++i) {
      const int u = out.assignment[i] - 1;
      int best = 0;
      for (int w = 1; w < dag.vocab_size; ++w)
        if (dag.log_probs(u, w) > dag.log_probs(u, best)) best = w;
      predicted[i] = best;
    }
    t = reveal_count(target, predicted, strategy.tau);
  } else {  // Uniform
    t = round_half_up(rng.uniform() * M);
  }
  t = std::min(t, M);

  out.revealed_count = t;
  for (int pos : sample_positions(M, t, rng))
    out.z[out.assignment[pos] - 1] = target[pos];
  return out;
}

double anneal_tau(long long step, long long total_steps, double tau_start, double tau_end) {
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return tau_start + (tau_end - tau_start) * frac;
}

}  // namespace dagdec

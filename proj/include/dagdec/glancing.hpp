#pragma once

#include <span>
#include <vector>

#include "dagdec/dag.hpp"
#include "dagdec/rng.hpp"

namespace dagdec {

/// Sentinel for a masked position in the extra decoder input. Masked
/// positions contribute a zero embedding downstream.
inline constexpr int kMaskedToken = -1;

enum class Masking { AllMasked, Uniform, Adaptive };

struct MaskStrategy {
  Masking variant = Masking::Adaptive;
  double tau = 0.5;  // adaptive only, in [0, 1]
};

/// Extra decoder input for glancing training: target tokens placed at the
/// vertices of `assignment`, all but `revealed_count` of them masked.
struct GlancingInput {
  std::vector<int> z;   // length L over (token index | kMaskedToken)
  int revealed_count = 0;
  Path assignment;      // empty for the all-masked strategy
};

/// Vertex assignment for the target: the most probable path under the DAG
/// (Viterbi backtrace; deterministic tie-break toward smaller predecessors).
Path assign_targets(const Dag& dag, std::span<const int> target);

/// Number of tokens to reveal: round-half-up of tau times the count of
/// positions where the vertex argmax disagrees with the target.
int reveal_count(std::span<const int> target, std::span<const int> predicted, double tau);

GlancingInput build_glancing_input(const Dag& dag, std::span<const int> target,
                                   const MaskStrategy& strategy, Rng& rng);

/// Linear interpolation from tau_start to tau_end over total_steps.
double anneal_tau(long long step, long long total_steps, double tau_start, double tau_end);

}  // namespace dagdec

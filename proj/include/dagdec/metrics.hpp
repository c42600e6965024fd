#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "dagdec/dag.hpp"

namespace dagdec {

using TokenSeq = std::vector<int>;

struct BleuResult {
  double score = 0.0;                       // in [0, 1]
  std::array<double, 4> precisions{};       // clipped n-gram precisions
  double brevity_penalty = 1.0;
  long hyp_len = 0;
  long ref_len = 0;
  std::array<long, 4> matched{};
  std::array<long, 4> total{};
};

/// Corpus-level BLEU-4 with clipped counts and brevity penalty. Without
/// smoothing the score is 0 whenever some precision is 0; with smoothing,
/// add-1 is applied to every order (useful for tiny corpora).
BleuResult bleu(const std::vector<TokenSeq>& hypotheses,
                const std::vector<TokenSeq>& references, bool smooth = false);

/// Multi-reference BLEU: per-segment clipping against the maximum count over
/// the references; the brevity reference is the shortest reference, which
/// keeps the score at or above BLEU against any single member.
BleuResult multi_ref_bleu(const std::vector<TokenSeq>& hypotheses,
                          const std::vector<std::vector<TokenSeq>>& reference_sets,
                          bool smooth = false);

/// Diversity of sample sets: mean over ordered pairs (i, j), i != j, of
/// corpus BLEU scoring sample i against sample j as the reference. All sets
/// must share the same size k >= 2. Lower = more diverse.
double pairwise_bleu(const std::vector<std::vector<TokenSeq>>& sample_sets,
                     bool smooth = false);

/// Fraction of target positions whose best-assignment vertex (Viterbi path)
/// predicts the target token as its argmax.
double token_accuracy_best_assignment(const Dag& dag, std::span<const int> target);

struct BleuBucket {
  double lo;
  double hi;  // exclusive; +inf for the last bucket
  size_t count;
  BleuResult bleu;
};

/// Corpus BLEU partitioned by reference length; buckets are
/// [edges[k], edges[k+1]) plus [edges.back(), inf). Empty buckets are omitted.
std::vector<BleuBucket> bucketed_bleu(const std::vector<TokenSeq>& hypotheses,
                                      const std::vector<TokenSeq>& references,
                                      const std::vector<double>& edges,
                                      bool smooth = false);

}  // namespace dagdec

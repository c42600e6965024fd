#pragma once

#include <map>
#include <optional>
#include <vector>

#include "dagdec/dag.hpp"
#include "dagdec/ngram_lm.hpp"
#include "dagdec/rng.hpp"

namespace dagdec {

struct DecodeConfig {
  double alpha = 1.0;       // length-penalty exponent
  double gamma = 0.1;       // LM weight; forced to 0 when no LM is supplied
  int beam_size = 200;      // overall beam cap per vertex
  int per_length_cap = 10;  // per-hypothesis-length cap per vertex
  int expand_top_k = 5;     // joint (vertex, token) candidates per expansion
  double top_p = 0.8;       // nucleus mass for sampling
  double temperature = 1.0;

  void check() const;  // throws ConfigError
};

/// A translation prefix tracked jointly over every path that realizes it.
/// end_scores maps a 1-based end vertex to the probability sum of the
/// prefix's paths ending there; total is their sum.
struct Beam {
  std::vector<int> tokens;
  std::map<int, double> end_scores;
  double total = 0.0;
};

struct BeamHypothesis {
  std::vector<int> tokens;
  double score;     // (log P(Y|X) + gamma log P_lm(Y)) / |Y|^alpha
  double log_prob;  // log probability sum of the complete paths emitting Y
};

/// Argmax walk: emit the most likely token at the current vertex, jump along
/// the most likely transition, stop after emitting at the terminal vertex.
std::vector<int> decode_greedy(const Dag& dag);

/// Greedy walk with each transition row reweighted by the destination
/// vertex's max token probability (joint argmax over next vertex and token).
std::vector<int> decode_lookahead(const Dag& dag);

/// Prefix-merging beam search over the DAG, optional n-gram LM fusion.
/// Hypotheses that reach the terminal vertex are ranked by the length- and
/// LM-adjusted score of their complete-path probability sum; the full ranked
/// list is returned (best first).
std::vector<BeamHypothesis> decode_beam(const Dag& dag, const DecodeConfig& cfg,
                                        const NgramLm* lm = nullptr);

/// Nucleus sampling walk: temperature-scale then top-p filter the token row
/// of the current vertex and the transition row for the next jump, each
/// independently; stop after sampling the terminal vertex's token.
std::vector<int> decode_sample(const Dag& dag, const DecodeConfig& cfg, Rng& rng);

/// Exposed for tests: tempered + nucleus-filtered distribution over the
/// finite entries of a log-probability row, renormalized.
std::vector<std::pair<int, double>> nucleus_distribution(const Mat& log_rows, int row,
                                                         double top_p,
                                                         double temperature);

}  // namespace dagdec

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dagdec {

/// Count-based n-gram language model with stupid-backoff scoring, used for
/// beam-search fusion. Sentences are padded with order-1 boundary-begin
/// tokens and one boundary-end token before counting, so conditionals near
/// sentence edges are well defined. The unigram level is add-1 smoothed over
/// the vocabulary, which keeps every score finite.
class NgramLm {
 public:
  NgramLm() = default;

  /// Counts all k-grams (k <= order) over the padded corpus. Sequences are
  /// raw (unwrapped) token ids. Throws EmptyCorpusError / ConfigError.
  static NgramLm fit(const std::vector<std::vector<int>>& corpus, int order,
                     int vocab_size, int bos_id, int eos_id,
                     double backoff_factor = 0.4);

  int order() const { return order_; }
  int bos_id() const { return bos_id_; }
  double backoff_factor() const { return backoff_; }

  long long count(std::span<const int> gram) const;

  /// Incremental scoring state: the most recent order-1 tokens.
  struct State {
    std::vector<int> history;
  };

  /// State positioned at a sentence boundary.
  State begin() const;

  /// Log stupid-backoff score of `token` given the state, advancing the
  /// state. The boundary-begin token scores 0 (it is context, not an event).
  double score_token(State& state, int token) const;

  /// Sum of per-token conditional log scores from a boundary-begin state.
  /// Empty input scores 0.
  double score(std::span<const int> tokens) const;

  void save(const std::string& path) const;
  static NgramLm load(const std::string& path);

 private:
  double backoff_score(std::span<const int> history, int token) const;

  int order_ = 0;
  int vocab_size_ = 0;
  int bos_id_ = -1;
  int eos_id_ = -1;
  double backoff_ = 0.4;
  long long total_unigrams_ = 0;
  std::unordered_map<std::string, long long> counts_;  // key = packed gram

  static std::string pack(std::span<const int> gram);
};

}  // namespace dagdec

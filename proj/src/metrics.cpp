#include "dagdec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "dagdec/dp.hpp"
#include "dagdec/errors.hpp"

namespace dagdec {

namespace {

using GramCounts = std::map<std::vector<int>, long>;

GramCounts count_ngrams(const TokenSeq& seq, int n) {
  GramCounts counts;
  if (static_cast<int>(seq.size()) >= n)
    for (size_t s = 0; s + n <= seq.size(); ++s)
      counts[{seq.begin() + s, seq.begin() + s + n}] += 1;
  return counts;
}

struct Accumulator {
  std::array<long, 4> matched{};
  std::array<long, 4> total{};
  long hyp_len = 0;
  long ref_len = 0;

  void add_segment(const TokenSeq& hyp, const std::vector<TokenSeq>& refs) {
    hyp_len += static_cast<long>(hyp.size());
    long best = refs.empty() ? 0 : static_cast<long>(refs[0].size());
    for (const auto& r : refs) best = std::min(best, static_cast<long>(r.size()));
    ref_len += best;
    for (int n = 1; n <= 4; ++n) {
      const GramCounts hyp_counts = count_ngrams(hyp, n);
      GramCounts clip;
      for (const auto& r : refs)
        for (const auto& [gram, c] : count_ngrams(r, n)) {
          long& m = clip[gram];
          m = std::max(m, c);
        }
      for (const auto& [gram, c] : hyp_counts) {
        total[n - 1] += c;
        const auto it = clip.find(gram);
        if (it != clip.end()) matched[n - 1] += std::min(c, it->second);
      }
    }
  }

  BleuResult finish(bool smooth) const {
    BleuResult r;
    r.matched = matched;
    r.total = total;
    r.hyp_len = hyp_len;
    r.ref_len = ref_len;
    double log_prec = 0.0;
    bool zero = false;
    for (int n = 0; n < 4; ++n) {
      double p;
      if (smooth) {
        p = static_cast<double>(matched[n] + 1) / static_cast<double>(total[n] + 1);
      } else {
        p = total[n] > 0 ? static_cast<double>(matched[n]) / static_cast<double>(total[n]) : 0.0;
      }
      r.precisions[n] = p;
      if (p <= 0.0)
        zero = true;
      else
        log_prec += std::log(p);
    }
    r.brevity_penalty =
        (hyp_len == 0 || hyp_len >= ref_len)
            ? 1.0
            : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    r.score = (zero || hyp_len == 0) ? 0.0 : r.brevity_penalty * std::exp(log_prec / 4.0);
    return r;
  }
};

}  // namespace

BleuResult bleu(const std::vector<TokenSeq>& hypotheses,
                const std::vector<TokenSeq>& references, bool smooth) {
  if (hypotheses.size() != references.size())
    throw ConfigError("bleu: hypothesis and reference counts differ");
  Accumulator acc;
  for (size_t s = 0; s < hypotheses.size(); ++s)
    acc.add_segment(hypotheses[s], {references[s]});
  return acc.finish(smooth);
}

BleuResult multi_ref_bleu(const std::vector<TokenSeq>& hypotheses,
                          const std::vector<std::vector<TokenSeq>>& reference_sets,
                          bool smooth) {
  if (hypotheses.size() != reference_sets.size())
    throw ConfigError("multi_ref_bleu: hypothesis and reference-set counts differ");
  Accumulator acc;
  for (size_t s = 0; s < hypotheses.size(); ++s) {
    if (reference_sets[s].empty())
      throw ConfigError("multi_ref_bleu: empty reference set for a segment");
    acc.add_segment(hypotheses[s], reference_sets[s]);
  }
  return acc.finish(smooth);
}

double pairwise_bleu(const std::vector<std::vector<TokenSeq>>& sample_sets, bool smooth) {
  if (sample_sets.empty()) throw ConfigError("pairwise_bleu: no sample sets");
  const size_t k = sample_sets[0].size();
  if (k < 2) throw ConfigError("pairwise_bleu: need at least 2 samples per source");
  for (const auto& set : sample_sets)
    if (set.size() != k)
      throw ConfigError("pairwise_bleu: sample sets must share the same size");

  double sum = 0.0;
  int pairs = 0;
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      std::vector<TokenSeq> hyps, refs;
      for (const auto& set : sample_sets) {
        hyps.push_back(set[i]);
        refs.push_back(set[j]);
      }
      sum += bleu(hyps, refs, smooth).score;
      ++pairs;
    }
  }
  return sum / pairs;
}

double token_accuracy_best_assignment(const Dag& dag, std::span<const int> target) {
  const Path path = loss_max(dag, target).best_path;
  int correct = 0;
  for (size_t i = 0; i < target.size(); ++i) {
    const int u = path[i] - 1;
    int best = 0;
    for (int w = 1; w < dag.vocab_size; ++w)
      if (dag.log_probs(u, w) > dag.log_probs(u, best)) best = w;
    if (best == target[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(target.size());
}

std::vector<BleuBucket> bucketed_bleu(const std::vector<TokenSeq>& hypotheses,
                                      const std::vector<TokenSeq>& references,
                                      const std::vector<double>& edges, bool smooth) {
  if (hypotheses.size() != references.size())
    throw ConfigError("bucketed_bleu: hypothesis and reference counts differ");
  if (edges.empty()) throw ConfigError("bucketed_bleu: no bucket edges");
  for (size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ConfigError("bucketed_bleu: edges must increase");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<BleuBucket> out;
  for (size_t b = 0; b < edges.size(); ++b) {
    const double lo = edges[b];
    const double hi = (b + 1 < edges.size()) ? edges[b + 1] : inf;
    std::vector<TokenSeq> h, r;
    for (size_t s = 0; s < references.size(); ++s) {
      const double len = static_cast<double>(references[s].size());
      if (len >= lo && len < hi) {
        h.push_back(hypotheses[s]);
        r.push_back(references[s]);
      }
    }
    if (h.empty()) continue;
    out.push_back({lo, hi, h.size(), bleu(h, r, smooth)});
  }
  return out;
}

}  // namespace dagdec

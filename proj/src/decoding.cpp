#include "dagdec/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dagdec/errors.hpp"

namespace dagdec {

namespace {

int argmax_row(const Mat& m, int row) {
  int best = 0;
  for (int j = 1; j < m.cols(); ++j)
    if (m(row, j) > m(row, best)) best = j;
  return best;
}

std::vector<int> walk(const Dag& dag, const std::vector<int>& jump_to) {
  const int L = dag.graph_size;
  std::vector<int> out;
  int u = 0;
  out.push_back(argmax_row(dag.log_probs, 0));
  while (u != L - 1) {
    u = jump_to[u];
    out.push_back(argmax_row(dag.log_probs, u));
  }
  return out;
}

}  // namespace

void DecodeConfig::check() const {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (per_length_cap < 1) throw ConfigError("per_length_cap must be >= 1");
  if (expand_top_k < 1) throw ConfigError("expand_top_k must be >= 1");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
}

std::vector<int> decode_greedy(const Dag& dag) {
  const int L = dag.graph_size;
  std::vector<int> jump(L, L - 1);
  for (int i = 0; i + 1 < L; ++i) {
    int best = i + 1;
    for (int v = i + 2; v < L; ++v)
      if (dag.log_trans(i, v) > dag.log_trans(i, best)) best = v;
    jump[i] = best;
  }
  return walk(dag, jump);
}

std::vector<int> decode_lookahead(const Dag& dag) {
  const int L = dag.graph_size;
  Vec max_tok(L);
  for (int u = 0; u < L; ++u) max_tok(u) = dag.log_probs(u, argmax_row(dag.log_probs, u));
  std::vector<int> jump(L, L - 1);
  for (int i = 0; i + 1 < L; ++i) {
    int best = i + 1;
    double best_score = dag.log_trans(i, i + 1) + max_tok(i + 1);
    for (int v = i + 2; v < L; ++v) {
      const double s = dag.log_trans(i, v) + max_tok(v);
      if (s > best_score) {
        best_score = s;
        best = v;
      }
    }
    jump[i] = best;
  }
  return walk(dag, jump);
}

// ---------------------------------------------------------------------------
// Beam search
// ---------------------------------------------------------------------------

namespace {

struct BeamState {
  std::vector<int> tokens;
  std::map<int, double> log_end;  // 0-based end vertex -> log prob sum
  double log_total = kNegInf;
  double lm_logprob = 0.0;
  NgramLm::State lm_state;
};

struct BeamSearch {
  const Dag& dag;
  const DecodeConfig& cfg;
  const NgramLm* lm;
  double gamma;

  std::map<std::vector<int>, int> index;  // prefix -> state id (deterministic order)
  std::vector<BeamState> states;
  std::vector<std::vector<int>> at_vertex;  // vertex -> state ids with mass there

  BeamSearch(const Dag& d, const DecodeConfig& c, const NgramLm* l)
      : dag(d), cfg(c), lm(l), gamma(l ? c.gamma : 0.0), at_vertex(d.graph_size) {}

  // Emitted length excluding the start token, floored at 1 for scoring.
  static double length_of(const std::vector<int>& tokens) {
    return std::max<double>(1.0, static_cast<double>(tokens.size()) - 1.0);
  }

  double score(const BeamState& b, double log_p) const {
    return (log_p + gamma * b.lm_logprob) / std::pow(length_of(b.tokens), cfg.alpha);
  }

  int state_for(std::vector<int> prefix, const BeamState* parent, int token) {
    const auto it = index.find(prefix);
    if (it != index.end()) return it->second;
    BeamState s;
    s.tokens = prefix;
    if (lm) {
      s.lm_state = parent ? parent->lm_state : lm->begin();
      s.lm_logprob = (parent ? parent->lm_logprob : 0.0) + lm->score_token(s.lm_state, token);
    }
    const int id = static_cast<int>(states.size());
    index.emplace(std::move(prefix), id);
    states.push_back(std::move(s));
    return id;
  }

  void add_mass(int id, int vertex, double log_p) {
    BeamState& s = states[id];
    auto [it, inserted] = s.log_end.emplace(vertex, log_p);
    if (!inserted) it->second = log_add(it->second, log_p);
    s.log_total = log_add(s.log_total, log_p);
    if (inserted) at_vertex[vertex].push_back(id);
  }

  // Beams surviving the per-length and overall caps at vertex i, best first.
  std::vector<int> filtered(int i) {
    std::vector<int>& ids = at_vertex[i];
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
      const double sa = score(states[a], states[a].log_total);
      const double sb = score(states[b], states[b].log_total);
      if (sa != sb) return sa > sb;
      return states[a].tokens < states[b].tokens;
    });
    std::vector<int> kept;
    std::map<size_t, int> per_length;
    for (int id : ids) {
      if (static_cast<int>(kept.size()) >= cfg.beam_size) break;
      int& n = per_length[states[id].tokens.size()];
      if (n >= cfg.per_length_cap) continue;
      ++n;
      kept.push_back(id);
    }
    return kept;
  }

  std::vector<BeamHypothesis> run() {
    const int L = dag.graph_size;

    // Vertex 1 emits the first token; seed one beam per top candidate token.
    {
      std::vector<int> toks(dag.vocab_size);
      std::iota(toks.begin(), toks.end(), 0);
      std::stable_sort(toks.begin(), toks.end(), [&](int a, int b) {
        if (dag.log_probs(0, a) != dag.log_probs(0, b))
          return dag.log_probs(0, a) > dag.log_probs(0, b);
        return a < b;
      });
      const int k = std::min<int>(cfg.expand_top_k, dag.vocab_size);
      for (int c = 0; c < k; ++c) {
        const double lp = dag.log_probs(0, toks[c]);
        if (lp == kNegInf) continue;
        add_mass(state_for({toks[c]}, nullptr, toks[c]), 0, lp);
      }
    }

    for (int i = 0; i + 1 < L; ++i) {
      if (at_vertex[i].empty()) continue;
      // Joint (vertex, token) candidates of vertex i, shared by all beams there.
      std::vector<std::pair<int, int>> cands;
      for (int v = i + 1; v < L; ++v) {
        if (dag.log_trans(i, v) == kNegInf) continue;
        for (int t = 0; t < dag.vocab_size; ++t)
          if (dag.log_probs(v, t) != kNegInf) cands.emplace_back(v, t);
      }
      auto joint = [&](const std::pair<int, int>& c) {
        return dag.log_trans(i, c.first) + dag.log_probs(c.first, c.second);
      };
      const size_t k = std::min<size_t>(cands.size(), static_cast<size_t>(cfg.expand_top_k));
      std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(k), cands.end(),
                        [&](const auto& a, const auto& b) {
                          const double ja = joint(a), jb = joint(b);
                          if (ja != jb) return ja > jb;
                          return a < b;
                        });
      cands.resize(k);

      for (int id : filtered(i)) {
        const double base = states[id].log_end.at(i);
        for (const auto& [v, t] : cands) {
          std::vector<int> prefix = states[id].tokens;
          prefix.push_back(t);
          const int nid = state_for(std::move(prefix), &states[id], t);
          add_mass(nid, v, base + joint({v, t}));
        }
      }
    }

    std::vector<BeamHypothesis> out;
    for (int id : at_vertex[L - 1]) {
      const BeamState& s = states[id];
      const double lp = s.log_end.at(L - 1);
      out.push_back({s.tokens, score(s, lp), lp});
    }
    std::stable_sort(out.begin(), out.end(), [](const BeamHypothesis& a, const BeamHypothesis& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.tokens < b.tokens;
    });
    if (out.empty()) throw Error("beam search produced no complete hypothesis");
    return out;
  }
};

}  // namespace

std::vector<BeamHypothesis> decode_beam(const Dag& dag, const DecodeConfig& cfg,
                                        const NgramLm* lm) {
  cfg.check();
  return BeamSearch(dag, cfg, lm).run();
}

// ---------------------------------------------------------------------------
// Nucleus sampling
// ---------------------------------------------------------------------------

std::vector<std::pair<int, double>> nucleus_distribution(const Mat& log_rows, int row,
                                                         double top_p,
                                                         double temperature) {
  std::vector<std::pair<int, double>> scaled;  // (index, log p / T)
  double mx = kNegInf;
  for (int j = 0; j < log_rows.cols(); ++j) {
    if (log_rows(row, j) == kNegInf) continue;
    const double s = log_rows(row, j) / temperature;
    scaled.emplace_back(j, s);
    mx = std::max(mx, s);
  }
  if (scaled.empty()) throw DegenerateError("cannot sample from an all-zero row");
  std::stable_sort(scaled.begin(), scaled.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  double z = 0.0;
  for (const auto& [j, s] : scaled) z += std::exp(s - mx);
  // smallest prefix of the sorted tempered distribution with mass >= top_p
  // (tolerance absorbs the renormalization rounding at exact boundaries)
  std::vector<std::pair<int, double>> nucleus;
  double cum = 0.0;
  for (const auto& [j, s] : scaled) {
    const double p = std::exp(s - mx) / z;
    nucleus.emplace_back(j, p);
    cum += p;
    if (cum >= top_p - 1e-12) break;
  }
  for (auto& [j, p] : nucleus) p /= cum;
  return nucleus;
}

namespace {

int sample_from(const std::vector<std::pair<int, double>>& dist, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (const auto& [j, p] : dist) {
    cum += p;
    if (u < cum) return j;
  }
  return dist.back().first;
}

}  // namespace

std::vector<int> decode_sample(const Dag& dag, const DecodeConfig& cfg, Rng& rng) {
  cfg.check();
  const int L = dag.graph_size;
  std::vector<int> out;
  int u = 0;
  out.push_back(sample_from(
      nucleus_distribution(dag.log_probs, 0, cfg.top_p, cfg.temperature), rng));
  while (u != L - 1) {
    u = sample_from(
        nucleus_distribution(dag.log_trans, u, cfg.top_p, cfg.temperature), rng);
    out.push_back(sample_from(
        nucleus_distribution(dag.log_probs, u, cfg.top_p, cfg.temperature), rng));
  }
  return out;
}

}  // namespace dagdec

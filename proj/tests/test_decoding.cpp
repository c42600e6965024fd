#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "dagdec/decoding.hpp"
#include "dagdec/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dagdec;

namespace {

DecodeConfig uncapped(int L, int V) {
  DecodeConfig cfg;
  cfg.alpha = 1.0;
  cfg.gamma = 0.0;
  cfg.beam_size = 1 << 20;
  cfg.per_length_cap = 1 << 20;
  cfg.expand_top_k = L * V + 1;
  return cfg;
}

double beam_oracle_score(const std::vector<int>& tokens, double merged_prob, double alpha) {
  const double len = std::max<double>(1.0, static_cast<double>(tokens.size()) - 1.0);
  return std::log(merged_prob) / std::pow(len, alpha);
}

}  // namespace

TEST_CASE("greedy on D1 follows 1-2-3-4") {
  CHECK(decode_greedy(fixtures::d1()) == std::vector<int>{0, 1, 1, 2});
}

TEST_CASE("greedy on a chain emits every argmax token") {
  const Dag chain = fixtures::chain(5, 3);
  CHECK(decode_greedy(chain) == std::vector<int>{0, 1, 2, 0, 1});
  CHECK(decode_lookahead(chain) == decode_greedy(chain));
}

TEST_CASE("single-vertex graph decodes a single token") {
  Mat p(1, 2);
  p << 0.25, 0.75;
  const Dag dag = Dag::from_linear(p, Mat::Zero(1, 1));
  CHECK(decode_greedy(dag) == std::vector<int>{1});
  CHECK(decode_lookahead(dag) == std::vector<int>{1});
}

TEST_CASE("lookahead on D1 jumps 1-2-4") {
  CHECK(decode_lookahead(fixtures::d1()) == std::vector<int>{0, 1, 2});
}

TEST_CASE("lookahead equals greedy when max token probabilities are uniform") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int L = rng.randint(2, 7);
    Dag dag = oracle::random_dag(rng, L, 3);
    // flatten every token row to the same peaked shape
    for (int u = 0; u < L; ++u) {
      dag.log_probs(u, 0) = std::log(0.6);
      dag.log_probs(u, 1) = std::log(0.3);
      dag.log_probs(u, 2) = std::log(0.1);
    }
    CHECK(decode_lookahead(dag) == decode_greedy(dag));
  }
}

TEST_CASE("outputs end at the terminal vertex and fit the graph") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = rng.randint(2, 8);
    const Dag dag = oracle::random_dag(rng, L, 4);
    for (const auto& hyp : {decode_greedy(dag), decode_lookahead(dag)}) {
      CHECK(hyp.size() <= static_cast<size_t>(L));
      int best = 0;
      for (int w = 1; w < 4; ++w)
        if (dag.log_probs(L - 1, w) > dag.log_probs(L - 1, best)) best = w;
      CHECK(hyp.back() == best);
    }
  }
}

TEST_CASE("beam on D1 merges the two paths of [a b eos]") {
  const auto hyps = decode_beam(fixtures::d1(), uncapped(4, 3));
  REQUIRE(!hyps.empty());
  CHECK(hyps[0].tokens == std::vector<int>{0, 1, 2});
  CHECK(std::exp(hyps[0].log_prob) == doctest::Approx(0.273375).epsilon(1e-9));
  // greedy's output is strictly worse under the merged probability
  const auto merged = oracle::translation_probs(fixtures::d1());
  CHECK(merged.at({0, 1, 1, 2}) == doctest::Approx(0.093555).epsilon(1e-9));
  CHECK(merged.at({0, 1, 2}) == doctest::Approx(0.273375).epsilon(1e-9));
}

TEST_CASE("beam on a chain reproduces greedy") {
  const Dag chain = fixtures::chain(5, 3);
  const auto hyps = decode_beam(chain, uncapped(5, 3));
  CHECK(hyps[0].tokens == decode_greedy(chain));
}

TEST_CASE("uncapped beam equals the enumeration argmax on 200 random DAGs") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = rng.randint(2, 6);
    const int V = rng.randint(2, 4);
    const Dag dag = oracle::random_dag(rng, L, V);
    const auto hyps = decode_beam(dag, uncapped(L, V));
    REQUIRE(!hyps.empty());

    const auto merged = oracle::translation_probs(dag);
    double best_score = -1e300;
    for (const auto& [tokens, prob] : merged)
      best_score = std::max(best_score, beam_oracle_score(tokens, prob, 1.0));
    const double got_score = beam_oracle_score(hyps[0].tokens, merged.at(hyps[0].tokens), 1.0);
    CHECK(got_score == doctest::Approx(best_score).epsilon(1e-9));
    // the reported merged probability must be exact
    CHECK(hyps[0].log_prob ==
          doctest::Approx(std::log(merged.at(hyps[0].tokens))).epsilon(1e-9));
  }
}

TEST_CASE("reported beam score is recomputable from scratch") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const int L = rng.randint(2, 6);
    const Dag dag = oracle::random_dag(rng, L, 3);
    DecodeConfig cfg = uncapped(L, 3);
    cfg.alpha = 1.2;
    const auto hyps = decode_beam(dag, cfg);
    const auto merged = oracle::translation_probs(dag);
    const double want = beam_oracle_score(hyps[0].tokens, merged.at(hyps[0].tokens), cfg.alpha);
    CHECK(hyps[0].score == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("minimal beam caps reproduce lookahead") {
  Rng rng(31);
  DecodeConfig cfg;
  cfg.alpha = 0.0;
  cfg.gamma = 0.0;
  cfg.beam_size = 1;
  cfg.per_length_cap = 1;
  cfg.expand_top_k = 1;
  for (int trial = 0; trial < 100; ++trial) {
    const int L = rng.randint(2, 8);
    const Dag dag = oracle::random_dag(rng, L, 4);
    const auto hyps = decode_beam(dag, cfg);
    CHECK(hyps[0].tokens == decode_lookahead(dag));
  }
}

TEST_CASE("language-model fusion reranks the beam") {
  // two hypotheses tie in model probability; the LM prefers the one whose
  // bigram it has seen
  Mat p(3, 4);
  p << 0.5, 0.5, 0.0, 0.0,
       1.0, 0.0, 0.0, 0.0,
       0.0, 0.0, 1.0, 0.0;
  Mat e = Mat::Zero(3, 3);
  e(0, 1) = 1.0;
  e(1, 2) = 1.0;
  const Dag dag = Dag::from_linear(p, e);

  const std::vector<std::vector<int>> corpus{{1, 0, 2}};  // favors starting with 1
  const NgramLm lm = NgramLm::fit(corpus, 2, 4, /*bos=*/3, /*eos=*/2);

  DecodeConfig cfg = uncapped(3, 4);
  cfg.gamma = 0.5;
  const auto with_lm = decode_beam(dag, cfg, &lm);
  CHECK(with_lm[0].tokens == std::vector<int>{1, 0, 2});

  cfg.gamma = 0.0;
  const auto no_lm = decode_beam(dag, cfg, &lm);
  CHECK(no_lm[0].tokens == std::vector<int>{0, 0, 2});  // tie broken lexicographically
}

TEST_CASE("nucleus distribution on D1 row 1 keeps vertices 2 and 3") {
  const auto dist = nucleus_distribution(fixtures::d1().log_trans, 0, 0.8, 1.0);
  REQUIRE(dist.size() == 2);
  CHECK(dist[0].first == 1);
  CHECK(dist[1].first == 2);
  CHECK(dist[0].second == doctest::Approx(0.5 / 0.8).epsilon(1e-12));
  CHECK(dist[1].second == doctest::Approx(0.3 / 0.8).epsilon(1e-12));
}

TEST_CASE("sampling at near-zero temperature matches greedy") {
  DecodeConfig cfg;
  cfg.top_p = 1.0;
  cfg.temperature = 1e-6;
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial)
    CHECK(decode_sample(fixtures::d1(), cfg, rng) == decode_greedy(fixtures::d1()));
}

TEST_CASE("sampling is reproducible for a fixed seed") {
  DecodeConfig cfg;
  cfg.top_p = 1.0;
  cfg.temperature = 1.0;
  Rng a(5), b(5);
  for (int trial = 0; trial < 10; ++trial)
    CHECK(decode_sample(fixtures::d1(), cfg, a) == decode_sample(fixtures::d1(), cfg, b));
}

TEST_CASE("first-jump frequencies match the renormalized nucleus") {
  DecodeConfig cfg;  // defaults: top_p 0.8, temperature 1.0
  Rng rng(2024);
  const int n = 10000;
  std::map<size_t, int> len_counts;  // v4 first-jump gives length 2, else 3+
  int to_v2 = 0, to_v3 = 0;
  for (int s = 0; s < n; ++s) {
    const auto out = decode_sample(fixtures::d1(), cfg, rng);
    // jumping 1->2 (emits 3+ tokens via 2) vs 1->3 (3 tokens via 3): recover the
    // first jump from the output length and second token's source
    REQUIRE(out.size() >= 2);
    if (out.size() == 4)
      ++to_v2;  // 1->2->3->4 is the only 4-token walk
    ++len_counts[out.size()];
  }
  // nucleus over row 1 is {v2: 0.625, v3: 0.375}; v4 must never be first
  CHECK(len_counts.count(2) == 0);
  // P(first jump = v2) = 0.625: walks through v2 have length 3 or 4; walks
  // through v3 always have length 3. Count 4-token walks = 0.625 * P(2->3).
  // Instead assert via the complementary: length-3 walks that went 1->3->4.
  // Simpler and robust: re-derive the first jump by simulating with the same
  // seed is overkill; use the expected fraction of walks entering v2:
  // p(len 4) = p(1->2) * p(2->3 | nucleus at v2).
  // nucleus at v2 row (0.55, 0.45) with top_p 0.8: both kept (0.55 < 0.8).
  const double p_len4 = 0.625 * 0.55;
  const double se = std::sqrt(p_len4 * (1 - p_len4) / n);
  CHECK(std::abs(static_cast<double>(to_v2) / n - p_len4) < 3 * se + 1e-12);
}

TEST_CASE("invalid decode configs are rejected") {
  DecodeConfig cfg;
  cfg.beam_size = 0;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg = DecodeConfig{};
  cfg.top_p = 0.0;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg = DecodeConfig{};
  cfg.temperature = 0.0;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dagdec/errors.hpp"
#include "dagdec/metrics.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dagdec;

namespace {

TokenSeq seq(std::initializer_list<int> xs) { return TokenSeq(xs); }

std::vector<TokenSeq> random_corpus(Rng& rng, int n, int max_len, int vocab) {
  std::vector<TokenSeq> out;
  for (int i = 0; i < n; ++i) {
    TokenSeq s(static_cast<size_t>(rng.randint(1, max_len)));
    for (auto& t : s) t = rng.randint(0, vocab - 1);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("identical corpus scores 1.0") {
  const std::vector<TokenSeq> c{seq({1, 2, 3, 4, 5}), seq({2, 2, 4, 7})};
  const BleuResult r = bleu(c, c);
  CHECK(r.score == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.brevity_penalty == doctest::Approx(1.0));
}

TEST_CASE("brevity penalty worked example") {
  // hyp of 4 tokens fully contained in an 8-token reference
  const BleuResult r = bleu({seq({1, 2, 3, 4})}, {seq({1, 2, 3, 4, 5, 6, 7, 8})});
  for (double p : r.precisions) CHECK(p == doctest::Approx(1.0));
  CHECK(r.brevity_penalty == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(r.score == doctest::Approx(0.3679).epsilon(1e-4));
}

TEST_CASE("no shared 4-gram means score zero without smoothing") {
  const BleuResult r = bleu({seq({1, 2, 3, 4, 5})}, {seq({1, 2, 9, 4, 5})});
  CHECK(r.precisions[3] == 0.0);
  CHECK(r.score == 0.0);
  const BleuResult s = bleu({seq({1, 2, 3, 4, 5})}, {seq({1, 2, 9, 4, 5})}, true);
  CHECK(s.score > 0.0);
}

TEST_CASE("bleu is permutation invariant over the corpus") {
  Rng rng(8);
  auto hyps = random_corpus(rng, 12, 9, 5);
  auto refs = random_corpus(rng, 12, 9, 5);
  const double base = bleu(hyps, refs, true).score;
  std::vector<size_t> order(hyps.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<TokenSeq> h2, r2;
  for (size_t i : order) {
    h2.push_back(hyps[i]);
    r2.push_back(refs[i]);
  }
  CHECK(bleu(h2, r2, true).score == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("mismatched corpus sizes are rejected") {
  CHECK_THROWS_AS(bleu({seq({1})}, {}), ConfigError);
}

TEST_CASE("multi-reference equals single reference in the degenerate case") {
  Rng rng(15);
  const auto hyps = random_corpus(rng, 8, 8, 5);
  const auto refs = random_corpus(rng, 8, 8, 5);
  std::vector<std::vector<TokenSeq>> sets;
  for (const auto& r : refs) sets.push_back({r});
  CHECK(multi_ref_bleu(hyps, sets, true).score ==
        doctest::Approx(bleu(hyps, refs, true).score).epsilon(1e-12));
}

TEST_CASE("hypothesis equal to one of its references gets unit precisions") {
  const std::vector<TokenSeq> hyps{seq({1, 2, 3, 4, 5})};
  const std::vector<std::vector<TokenSeq>> sets{{seq({9, 9, 9}), seq({1, 2, 3, 4, 5})}};
  const BleuResult r = multi_ref_bleu(hyps, sets);
  for (double p : r.precisions) CHECK(p == doctest::Approx(1.0));
}

TEST_CASE("multi_ref_bleu dominates bleu against every member") {
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.randint(2, 8);
    const auto hyps = random_corpus(rng, n, 8, 4);
    std::vector<std::vector<TokenSeq>> sets;
    const int k = rng.randint(1, 4);
    for (int s = 0; s < n; ++s) {
      std::vector<TokenSeq> refs;
      for (int j = 0; j < k; ++j) {
        TokenSeq r(static_cast<size_t>(rng.randint(1, 8)));
        for (auto& t : r) t = rng.randint(0, 3);
        refs.push_back(std::move(r));
      }
      sets.push_back(std::move(refs));
    }
    const double multi = multi_ref_bleu(hyps, sets, true).score;
    for (int j = 0; j < k; ++j) {
      std::vector<TokenSeq> single;
      for (const auto& set : sets) single.push_back(set[static_cast<size_t>(j)]);
      CHECK(multi >= bleu(hyps, single, true).score - 1e-12);
    }
  }
}

TEST_CASE("adding a reference never lowers the multi-reference score") {
  Rng rng(26);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.randint(2, 6);
    const auto hyps = random_corpus(rng, n, 8, 4);
    std::vector<std::vector<TokenSeq>> small, big;
    for (int s = 0; s < n; ++s) {
      auto refs = random_corpus(rng, 3, 8, 4);
      small.push_back({refs[0], refs[1]});
      big.push_back({refs[0], refs[1], refs[2]});
    }
    CHECK(multi_ref_bleu(hyps, big, true).score >=
          multi_ref_bleu(hyps, small, true).score - 1e-12);
  }
}

TEST_CASE("pairwise_bleu of identical samples is 1") {
  const std::vector<std::vector<TokenSeq>> sets{
      {seq({1, 2, 3, 4}), seq({1, 2, 3, 4}), seq({1, 2, 3, 4})},
      {seq({5, 6, 7, 8}), seq({5, 6, 7, 8}), seq({5, 6, 7, 8})}};
  CHECK(pairwise_bleu(sets) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pairwise_bleu of disjoint samples is 0") {
  const std::vector<std::vector<TokenSeq>> sets{
      {seq({1, 1, 1, 1}), seq({2, 2, 2, 2})},
      {seq({3, 3, 3, 3}), seq({4, 4, 4, 4})}};
  CHECK(pairwise_bleu(sets) == doctest::Approx(0.0));
}

TEST_CASE("pairwise_bleu with k=2 averages both directions") {
  const std::vector<std::vector<TokenSeq>> sets{
      {seq({1, 2, 3, 4, 5, 6}), seq({1, 2, 3, 4})}};
  const double ab = bleu({seq({1, 2, 3, 4, 5, 6})}, {seq({1, 2, 3, 4})}, true).score;
  const double ba = bleu({seq({1, 2, 3, 4})}, {seq({1, 2, 3, 4, 5, 6})}, true).score;
  CHECK(pairwise_bleu(sets, true) == doctest::Approx(0.5 * (ab + ba)).epsilon(1e-12));
}

TEST_CASE("pairwise_bleu rejects fewer than two samples") {
  CHECK_THROWS_AS(pairwise_bleu({{seq({1, 2})}}), ConfigError);
}

TEST_CASE("token accuracy on D1 and its degenerate cases") {
  const std::vector<int> y{0, 1, 2};
  CHECK(token_accuracy_best_assignment(fixtures::d1(), y) == doctest::Approx(1.0));
  // a chain degrades to positionwise accuracy
  const Dag chain = fixtures::chain(3, 3);
  CHECK(token_accuracy_best_assignment(chain, std::vector<int>{0, 1, 2}) ==
        doctest::Approx(1.0));
  CHECK(token_accuracy_best_assignment(chain, std::vector<int>{1, 1, 2}) ==
        doctest::Approx(2.0 / 3.0));
  // a graph whose argmaxes avoid the target entirely
  Mat p(2, 3);
  p << 0.8, 0.1, 0.1,
       0.8, 0.1, 0.1;
  Mat e = Mat::Zero(2, 2);
  e(0, 1) = 1.0;
  const Dag avoid = Dag::from_linear(p, e);
  CHECK(token_accuracy_best_assignment(avoid, std::vector<int>{1, 2}) == doctest::Approx(0.0));
}

TEST_CASE("a single bucket spanning everything equals corpus bleu") {
  Rng rng(30);
  const auto hyps = random_corpus(rng, 10, 12, 5);
  const auto refs = random_corpus(rng, 10, 12, 5);
  const auto buckets = bucketed_bleu(hyps, refs, {0.0}, true);
  REQUIRE(buckets.size() == 1);
  CHECK(buckets[0].count == 10);
  CHECK(buckets[0].bleu.score == doctest::Approx(bleu(hyps, refs, true).score));
}

TEST_CASE("bucket counts partition the corpus and empty buckets vanish") {
  const std::vector<TokenSeq> refs{seq({1, 2}), seq({1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1}),
                                   seq({1, 2, 3})};
  const std::vector<TokenSeq> hyps{seq({1, 2}), seq({1, 2, 3}), seq({3, 2, 1})};
  const auto buckets = bucketed_bleu(hyps, refs, {0.0, 10.0, 20.0}, true);
  size_t total = 0;
  for (const auto& b : buckets) total += b.count;
  CHECK(total == 3);
  for (const auto& b : buckets) CHECK(b.count > 0);  // the empty [20, inf) is absent
  REQUIRE(buckets.size() == 2);
  CHECK(buckets[0].count == 2);
  CHECK(buckets[1].count == 1);
}

TEST_CASE("non-monotone bucket edges are rejected") {
  CHECK_THROWS_AS(bucketed_bleu({}, {}, {5.0, 5.0}), ConfigError);
}

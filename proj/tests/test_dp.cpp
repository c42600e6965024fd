#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dagdec/dp.hpp"
#include "dagdec/errors.hpp"
#include "dagdec/numeric.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dagdec;

namespace {
const std::vector<int> kY{0, 1, 2};  // a b <eos>
}

TEST_CASE("loss_marginal on D1 matches the two-path hand computation") {
  const auto res = loss_marginal(fixtures::d1(), kY);
  CHECK(res.loss == doctest::Approx(-std::log(0.127575 + 0.14580)).epsilon(1e-12));
  CHECK(res.loss == doctest::Approx(1.29697).epsilon(1e-4));
  CHECK(res.tables.log_likelihood == doctest::Approx(std::log(0.273375)).epsilon(1e-12));
}

TEST_CASE("loss_marginal on a chain is the forced-path product") {
  const Dag dag = fixtures::chain(5, 3);
  const std::vector<int> y{0, 1, 2, 0, 1};
  double want = 0.0;
  for (int i = 0; i < 5; ++i) want -= dag.log_probs(i, y[i]);
  for (int i = 0; i + 1 < 5; ++i) want -= dag.log_trans(i, i + 1);
  CHECK(loss_marginal(dag, y).loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("length preconditions") {
  const Dag dag = fixtures::d1();
  CHECK_THROWS_AS(loss_marginal(dag, std::vector<int>{0, 1, 2, 0, 1}), LengthError);
  CHECK_THROWS_AS(loss_marginal(dag, std::vector<int>{0}), LengthError);
  CHECK_THROWS_AS(loss_marginal(dag, std::vector<int>{0, 9, 2}), VocabError);
}

TEST_CASE("single-vertex graph accepts a single-token target") {
  Mat p(1, 2);
  p << 0.25, 0.75;
  const Dag dag = Dag::from_linear(p, Mat::Zero(1, 1));
  CHECK(loss_marginal(dag, std::vector<int>{1}).loss ==
        doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("loss_max on D1 picks the (1,3,4) path") {
  const auto res = loss_max(fixtures::d1(), kY);
  CHECK(res.loss == doctest::Approx(-std::log(0.14580)).epsilon(1e-12));
  CHECK(res.loss == doctest::Approx(1.92552).epsilon(1e-4));
  CHECK(res.best_path == Path{1, 3, 4});
}

TEST_CASE("loss_max on a chain returns the identity path") {
  const Dag dag = fixtures::chain(5, 3);
  const auto res = loss_max(dag, std::vector<int>{0, 1, 2, 0, 1});
  CHECK(res.best_path == Path{1, 2, 3, 4, 5});
}

TEST_CASE("loss_max dominates loss_marginal") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int L = rng.randint(2, 8);
    const Dag dag = oracle::random_dag(rng, L, 4);
    const int M = rng.randint(2, L);
    std::vector<int> y(M);
    for (auto& t : y) t = rng.randint(0, 3);
    CHECK(loss_max(dag, y).loss >= loss_marginal(dag, y).loss - 1e-12);
  }
}

TEST_CASE("backward_dp boundary and one-step suffixes on D1") {
  const Mat b = backward_dp(fixtures::d1(), kY);
  CHECK(std::exp(b(2, 3)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::exp(b(1, 1)) == doctest::Approx(0.405).epsilon(1e-12));
  CHECK(std::exp(b(1, 2)) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("forward and backward tables agree at every position") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = rng.randint(2, 8);
    const Dag dag = oracle::random_dag(rng, L, 4);
    const int M = rng.randint(2, std::min(L, 6));
    std::vector<int> y(M);
    for (auto& t : y) t = rng.randint(0, 3);
    const auto res = loss_marginal(dag, y);
    for (int i = 0; i < M; ++i) {
      double lse = kNegInf;
      for (int u = 0; u < L; ++u)
        lse = log_add(lse, res.tables.f(i, u) + res.tables.b(i, u));
      CHECK(lse == doctest::Approx(res.tables.log_likelihood).epsilon(1e-9));
    }
  }
}

TEST_CASE("posteriors on D1 reproduce the path weights") {
  const auto post = posteriors(fixtures::d1(), kY);
  CHECK(post.gamma(1, 1) == doctest::Approx(7.0 / 15.0).epsilon(1e-9));
  CHECK(post.gamma(1, 2) == doctest::Approx(8.0 / 15.0).epsilon(1e-9));
  CHECK(post.gamma(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(post.gamma(2, 3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posterior rows sum to one and xi aggregates to gamma") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = rng.randint(2, 8);
    const Dag dag = oracle::random_dag(rng, L, 5);
    const int M = rng.randint(2, std::min(L, 6));
    std::vector<int> y(M);
    for (auto& t : y) t = rng.randint(0, 4);
    const auto post = posteriors(dag, y);
    for (int i = 0; i < M; ++i)
      CHECK(post.gamma.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (int i = 1; i < M; ++i)
      for (int u = 0; u < L; ++u)
        CHECK(post.xi[static_cast<size_t>(i - 1)].col(u).sum() ==
              doctest::Approx(post.gamma(i, u)).epsilon(1e-9));
  }
}

TEST_CASE("unreachable target raises DegenerateError") {
  const Dag dag = fixtures::chain(3, 3);
  Dag broken = dag;
  broken.log_probs(2, 2) = kNegInf;  // terminal cannot emit token 2...
  broken.log_probs(2, 0) = 0.0;      // ...renormalize crudely onto token 0
  broken.log_probs(2, 1) = kNegInf;
  CHECK_THROWS_AS(loss_marginal(broken, std::vector<int>{0, 1, 2}), DegenerateError);
}

TEST_CASE("DP matches exhaustive enumeration on 500 random instances") {
  Rng rng(1234);
  for (int trial = 0; trial < 500; ++trial) {
    const int L = rng.randint(2, 8);
    const int V = rng.randint(2, 5);
    const Dag dag = oracle::random_dag(rng, L, V);
    const int M = rng.randint(2, std::min(L, 6));
    std::vector<int> y(M);
    for (auto& t : y) t = rng.randint(0, V - 1);

    const double want_loss = oracle::marginal_loss(dag, y);
    const auto got = loss_marginal(dag, y);
    CHECK(got.loss == doctest::Approx(want_loss).epsilon(1e-9));

    const auto [want_max, want_path] = oracle::best_path(dag, y);
    const auto got_max = loss_max(dag, y);
    CHECK(got_max.loss == doctest::Approx(want_max).epsilon(1e-9));
    CHECK(oracle::path_prob(dag, got_max.best_path, y) ==
          doctest::Approx(oracle::path_prob(dag, want_path, y)).epsilon(1e-9));

    const Mat want_gamma = oracle::posteriors(dag, y);
    const auto got_post = posteriors(dag, y);
    for (int i = 0; i < M; ++i)
      for (int u = 0; u < L; ++u)
        CHECK(std::abs(got_post.gamma(i, u) - want_gamma(i, u)) < 1e-9);
  }
}

TEST_CASE("loss_grad matches central finite differences") {
  Rng rng(77);
  const double h = 1e-5;
  for (int trial = 0; trial < 25; ++trial) {
    const int L = rng.randint(3, 8);
    const int V = rng.randint(2, 5);
    Dag dag = oracle::random_dag(rng, L, V);
    const int M = rng.randint(2, std::min(L, 6));
    std::vector<int> y(M);
    for (auto& t : y) t = rng.randint(0, V - 1);

    const DpGrad grad = loss_grad(dag, y);
    CHECK(grad.d_log_probs(0, y[0]) < 0.0);

    for (int u = 0; u < L; ++u)
      for (int w = 0; w < V; ++w) {
        if (std::abs(grad.d_log_probs(u, w)) <= 1e-8) continue;
        const double fd = oracle::central_diff(
            [&](double x) {
              Dag d2 = dag;
              d2.log_probs(u, w) = x;
              return loss_marginal(d2, y).loss;
            },
            dag.log_probs(u, w), h);
        CHECK(std::abs(fd - grad.d_log_probs(u, w)) <=
              1e-6 * std::max(1.0, std::abs(fd)));
      }
    for (int v = 0; v < L; ++v)
      for (int u = v + 1; u < L; ++u) {
        if (std::abs(grad.d_log_trans(v, u)) <= 1e-8) continue;
        const double fd = oracle::central_diff(
            [&](double x) {
              Dag d2 = dag;
              d2.log_trans(v, u) = x;
              return loss_marginal(d2, y).loss;
            },
            dag.log_trans(v, u), h);
        CHECK(std::abs(fd - grad.d_log_trans(v, u)) <=
              1e-6 * std::max(1.0, std::abs(fd)));
      }
  }
}

TEST_CASE("gradient of E[1][2] on D1 equals the negated edge posterior") {
  const DpGrad grad = loss_grad(fixtures::d1(), kY);
  CHECK(grad.d_log_trans(0, 1) == doctest::Approx(-7.0 / 15.0).epsilon(1e-9));
}

TEST_CASE("tokens absent from the target get zero token gradient") {
  Mat p(3, 4);
  p << 0.4, 0.3, 0.2, 0.1,
       0.25, 0.25, 0.25, 0.25,
       0.1, 0.2, 0.3, 0.4;
  Mat e = Mat::Zero(3, 3);
  e(0, 1) = 0.6;
  e(0, 2) = 0.4;
  e(1, 2) = 1.0;
  const Dag dag = Dag::from_linear(p, e);
  const DpGrad grad = loss_grad(dag, std::vector<int>{0, 1});
  for (int u = 0; u < 3; ++u) {
    CHECK(grad.d_log_probs(u, 2) == 0.0);
    CHECK(grad.d_log_probs(u, 3) == 0.0);
  }
}

TEST_CASE("padding with near-zero-mass vertices barely moves the loss") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int L = rng.randint(3, 6);
    const int V = 4;
    const Dag dag = oracle::random_dag(rng, L, V);
    const int M = rng.randint(2, L);
    std::vector<int> y(M);
    for (auto& t : y) t = rng.randint(0, V - 1);
    const double base = loss_marginal(dag, y).loss;

    // two extra vertices squeezed in before the terminal, epsilon incoming mass
    const int extra = 2;
    const int L2 = L + extra;
    Mat p2(L2, V), e2 = Mat::Zero(L2, L2);
    const double eps = 1e-12;
    const auto old_of = [&](int u2) {  // maps new index -> old index or -1
      if (u2 < L - 1) return u2;
      if (u2 == L2 - 1) return L - 1;
      return -1;
    };
    for (int u2 = 0; u2 < L2; ++u2) {
      const int u = old_of(u2);
      for (int w = 0; w < V; ++w)
        p2(u2, w) = u >= 0 ? std::exp(dag.log_probs(u, w)) : 1.0 / V;
    }
    for (int u2 = 0; u2 + 1 < L2; ++u2) {
      const int u = old_of(u2);
      if (u < 0) {
        e2(u2, L2 - 1) = 1.0;  // padding vertices route straight to the terminal
        continue;
      }
      for (int v2 = u2 + 1; v2 < L2; ++v2) {
        const int v = old_of(v2);
        if (v > u) e2(u2, v2) = std::exp(dag.log_trans(u, v));
      }
      // siphon epsilon mass from the largest edge onto the padding vertices
      int largest = u2 + 1;
      for (int v2 = u2 + 1; v2 < L2; ++v2)
        if (e2(u2, v2) > e2(u2, largest)) largest = v2;
      for (int v2 = L - 1; v2 < L2 - 1; ++v2) {
        if (v2 <= u2) continue;
        e2(u2, v2) += eps;
        e2(u2, largest) -= eps;
      }
    }
    const Dag padded = Dag::from_linear(p2, e2);
    validate(padded);
    CHECK(std::abs(loss_marginal(padded, y).loss - base) < 1e-6);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dagdec/dag.hpp"
#include "dagdec/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dagdec;

TEST_CASE("validate accepts the D1 fixture") {
  CHECK_NOTHROW(validate(fixtures::d1()));
}

TEST_CASE("validate rejects lower-triangular transition mass") {
  Dag dag = fixtures::d1();
  dag.log_trans(1, 0) = std::log(0.1);  // E[2][1] = 0.1
  CHECK_THROWS_AS(validate(dag), StructureError);
}

TEST_CASE("validate rejects an unnormalized token row") {
  Dag dag = fixtures::d1();
  dag.log_probs.row(1).setConstant(kNegInf);  // all-zero row
  CHECK_THROWS_AS(validate(dag), NormalizationError);
  try {
    validate(dag);
  } catch (const NormalizationError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("validate rejects mass on the terminal row") {
  Dag dag = fixtures::d1();
  dag.log_trans(3, 3) = 0.0;
  CHECK_THROWS_AS(validate(dag), StructureError);
}

TEST_CASE("passing_probs on D1") {
  const Vec r = passing_probs(fixtures::d1());
  CHECK(r(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r(2) == doctest::Approx(0.575).epsilon(1e-12));
  CHECK(r(3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("passing_probs on a chain is all ones") {
  const Vec r = passing_probs(fixtures::chain(6, 3));
  for (int u = 0; u < 6; ++u) CHECK(r(u) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("passing_probs matches walk enumeration on random DAGs") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int L = rng.randint(2, 8);
    const Dag dag = oracle::random_dag(rng, L, rng.randint(2, 5));
    const Vec got = passing_probs(dag);
    const Vec want = oracle::walk_visit_probs(dag);
    for (int u = 0; u < L; ++u) CHECK(std::abs(got(u) - want(u)) < 1e-9);
    CHECK(std::abs(got(L - 1) - 1.0) < 1e-9);
  }
}

TEST_CASE("passing prob is monotone under added incoming mass") {
  // raw recursion with renormalization off: extra incoming edge mass can
  // only grow r[u]
  Dag dag = fixtures::d1();
  const double before = passing_probs(dag)(2);
  dag.log_trans(0, 2) = std::log(0.4);  // raw bump, row no longer normalized
  const double after = passing_probs(dag)(2);
  CHECK(after >= before);
}

TEST_CASE("prune_for_export drops low-passing vertices but keeps endpoints") {
  const auto view = prune_for_export(fixtures::d1(), 0.55, 1.0);
  REQUIRE(view.vertices.size() == 3);
  CHECK(view.vertices[0].id == 1);
  CHECK(view.vertices[1].id == 3);
  CHECK(view.vertices[2].id == 4);
}

TEST_CASE("prune_for_export with no thresholds keeps everything") {
  const Dag dag = fixtures::d1();
  const auto view = prune_for_export(dag, 0.0, 1.0);
  CHECK(view.vertices.size() == 4);
  CHECK(view.edges.size() == 6);  // all nonzero edges of D1
}

TEST_CASE("edge mass keeps the smallest prefix reaching the threshold") {
  // vertex 2's row is (0.55, 0.45); 0.55 < 0.9 so both edges stay
  const auto view = prune_for_export(fixtures::d1(), 0.0, 0.9);
  int from2 = 0;
  for (const auto& e : view.edges)
    if (e.from == 2) ++from2;
  CHECK(from2 == 2);
}

TEST_CASE("prune_for_export is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Dag dag = oracle::random_dag(rng, rng.randint(2, 8), rng.randint(2, 5));
    const double min_passing = rng.uniform(0.0, 0.6);
    const double edge_mass = rng.uniform(0.3, 1.0);
    const auto once = prune_for_export(dag, min_passing, edge_mass);
    const auto twice = prune_view(once, min_passing, edge_mass);
    REQUIRE(once.vertices.size() == twice.vertices.size());
    REQUIRE(once.edges.size() == twice.edges.size());
    for (size_t i = 0; i < once.edges.size(); ++i) {
      CHECK(once.edges[i].from == twice.edges[i].from);
      CHECK(once.edges[i].to == twice.edges[i].to);
    }
  }
}

TEST_CASE("dag_stats out-degree on D1 row 1") {
  // row 1 sorted: 0.5, 0.3, 0.2; cumulative reaches 0.8 after two edges
  const DagStats stats = dag_stats(fixtures::d1(), 0.2, 0.8, false);
  // vertices with r >= 0.2: all four; terminal contributes degree 0
  CHECK(stats.out_degree_hist.at(2) >= 1);
  CHECK(stats.out_degree_hist.at(0) == 1);
  CHECK(stats.max_token_probs(0) == doctest::Approx(0.9));
  CHECK(stats.max_token_probs(1) == doctest::Approx(0.7));
}

TEST_CASE("dag_stats with passing_floor 1 counts only the endpoints") {
  const DagStats stats = dag_stats(fixtures::d1(), 1.0, 0.8, false);
  int counted = 0;
  for (const auto& [deg, n] : stats.out_degree_hist) counted += n;
  CHECK(counted == 2);  // vertices 1 and 4 (r = 1); r < 1 elsewhere on D1
}

TEST_CASE("dag_stats merges successors with identical argmax tokens") {
  // vertices 2 and 3 both argmax token b, so vertex 1's kept edges merge
  const DagStats merged = dag_stats(fixtures::d1(), 0.2, 0.8, true);
  const DagStats plain = dag_stats(fixtures::d1(), 0.2, 0.8, false);
  CHECK(plain.out_degree_hist.at(2) == 2);   // vertices 1 and 2
  CHECK(merged.out_degree_hist.at(1) == 2);  // vertex 1 collapses to b; vertex 3 keeps v4
  CHECK(merged.out_degree_hist.at(2) == 1);  // vertex 2: argmax b vs <eos>
}

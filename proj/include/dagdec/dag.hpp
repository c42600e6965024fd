#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "dagdec/numeric.hpp"

namespace dagdec {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// A decoded graph instance. Vertices are 1..L in documentation and error
/// messages; storage is 0-based. Probabilities live in natural-log space
/// throughout (forbidden entries are -inf); linear-space views are derived.
///
/// Invariants (checked by validate()):
///   - every row of log_probs log-sum-exps to 0 within 1e-9
///   - log_trans(i, j) = -inf for all j <= i (strictly upper-triangular support)
///   - rows 1..L-1 of log_trans log-sum-exp to 0 within 1e-9; row L carries
///     no outgoing mass (the terminal vertex)
struct Dag {
  int graph_size = 0;               // L >= 1
  int vocab_size = 0;               // |V| >= 2
  Mat log_probs;                    // L x |V| token log-probabilities
  Mat log_trans;                    // L x L transition log-probabilities

  /// Build from linear-space matrices; zeros map to -inf.
  static Dag from_linear(const Mat& token_probs, const Mat& transitions);

  /// Linear-space views.
  Mat probs() const { return log_probs.array().exp(); }
  Mat trans() const { return log_trans.array().exp(); }
};

/// A root-to-terminal route: strictly increasing vertices, 1-based,
/// starting at 1 and ending at L.
using Path = std::vector<int>;

bool is_valid_path(const Path& path, int graph_size);

/// Per-vertex structure summary used for corpus-level DAG statistics.
struct DagStats {
  Vec passing_probs;           // r, length L
  Vec max_token_probs;         // per-vertex max over the token row
  std::map<int, int> out_degree_hist;  // kept-edge count -> number of vertices
};

/// Throws NormalizationError or StructureError if any Dag invariant fails.
void validate(const Dag& dag);

/// Probability that a random walk under the transition matrix visits each
/// vertex: r[1] = 1 and r[u] = sum_{v<u} r[v] * E[v][u]. r[L] = 1 for any
/// valid DAG since every walk terminates at L.
Vec passing_probs(const Dag& dag);

/// Vertex/edge subset retained for rendering. Keeps the original (unpruned)
/// probabilities so that pruning is idempotent.
struct PrunedView {
  struct Vertex {
    int id;          // 1-based
    double passing;  // r[id] from the source graph
  };
  struct Edge {
    int from, to;    // 1-based
    double prob;     // original transition probability
  };
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
};

/// Drops vertices with passing probability below min_passing (vertices 1 and
/// L are always kept), then per surviving vertex keeps its most probable
/// outgoing edges until their cumulative probability first reaches edge_mass.
/// Edge mass is counted per vertex over edges between kept vertices.
PrunedView prune_for_export(const Dag& dag, double min_passing, double edge_mass);

/// Re-prunes an existing view with the same semantics; a fixed point under
/// repeated application with unchanged thresholds.
PrunedView prune_view(const PrunedView& view, double min_passing, double edge_mass);

/// Passing probabilities, per-vertex max token probability, and the
/// out-degree histogram over vertices with r[u] >= passing_floor, counting
/// edges kept under edge_mass. With merge_same_token, edges pointing to
/// vertices whose argmax token is identical count once.
DagStats dag_stats(const Dag& dag, double passing_floor, double edge_mass,
                   bool merge_same_token);

}  // namespace dagdec

#pragma once

#include <string>
#include <vector>

#include "dagdec/dag.hpp"
#include "dagdec/data.hpp"

namespace dagdec {

/// JSON rendering of a pruned DAG view:
///   {"L": int, "vocab": [string], "vertices": [{"id", "passing", "top_tokens":
///    [{"token", "p"}]}], "edges": [{"from", "to", "p"}]}
/// Vertex ids are 1-based. top_k bounds the per-vertex token list.
std::string dag_to_json(const Dag& dag, const PrunedView& view, const Vocab& vocab,
                        int top_k = 3);

/// Graphviz DOT rendering: edge labels are transition probabilities with two
/// decimals, vertex labels show the top-k tokens.
std::string dag_to_dot(const Dag& dag, const PrunedView& view, const Vocab& vocab,
                       int top_k = 3);

}  // namespace dagdec

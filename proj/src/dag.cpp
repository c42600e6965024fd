#include "dagdec/dag.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dagdec/errors.hpp"

namespace dagdec {

namespace {

double row_lse(const Mat& m, int row) {
  double mx = kNegInf;
  for (int j = 0; j < m.cols(); ++j) mx = std::max(mx, m(row, j));
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (int j = 0; j < m.cols(); ++j) s += std::exp(m(row, j) - mx);
  return mx + std::log(s);
}

// Indices of row entries sorted by descending probability, ties toward the
// smaller column index so results are reproducible.
std::vector<int> sorted_desc(const std::vector<std::pair<int, double>>& entries) {
  std::vector<int> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (entries[a].second != entries[b].second) return entries[a].second > entries[b].second;
    return entries[a].first < entries[b].first;
  });
  return order;
}

// Keeps the smallest prefix of the descending-sorted edges whose cumulative
// probability reaches mass (within rounding); keeps everything if the total
// never reaches it.
std::vector<std::pair<int, double>> keep_by_mass(
    std::vector<std::pair<int, double>> edges, double mass) {
  const auto order = sorted_desc(edges);
  std::vector<std::pair<int, double>> kept;
  double cum = 0.0;
  for (int idx : order) {
    kept.push_back(edges[idx]);
    cum += edges[idx].second;
    if (cum >= mass - 1e-12) break;
  }
  return kept;
}

}  // namespace

Dag Dag::from_linear(const Mat& token_probs, const Mat& transitions) {
  Dag dag;
  dag.graph_size = static_cast<int>(token_probs.rows());
  dag.vocab_size = static_cast<int>(token_probs.cols());
  auto to_log = [](double p) { return p > 0.0 ? std::log(p) : kNegInf; };
  dag.log_probs = token_probs.unaryExpr(to_log);
  dag.log_trans = transitions.unaryExpr(to_log);
  return dag;
}

bool is_valid_path(const Path& path, int graph_size) {
  if (path.empty()) return false;
  if (path.front() != 1 || path.back() != graph_size) return false;
  for (size_t i = 1; i < path.size(); ++i)
    if (path[i] <= path[i - 1]) return false;
  return true;
}

void validate(const Dag& dag) {
  const int L = dag.graph_size;
  const int V = dag.vocab_size;
  if (L < 1) throw StructureError("graph_size must be >= 1");
  if (V < 2) throw StructureError("vocab_size must be >= 2");
  if (dag.log_probs.rows() != L || dag.log_probs.cols() != V)
    throw StructureError("token_probs shape does not match (L, |V|)");
  if (dag.log_trans.rows() != L || dag.log_trans.cols() != L)
    throw StructureError("transitions shape does not match (L, L)");

  constexpr double kTol = 1e-9;
  for (int i = 0; i < L; ++i) {
    const double lse = row_lse(dag.log_probs, i);
    if (!(std::abs(lse) <= kTol)) {
      std::ostringstream os;
      os << "token_probs row " << (i + 1) << " does not sum to 1 (log-sum " << lse << ")";
      throw NormalizationError(os.str());
    }
  }
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j <= i && j < L; ++j) {
      if (dag.log_trans(i, j) != kNegInf) {
        std::ostringstream os;
        os << "transition mass at E[" << (i + 1) << "][" << (j + 1)
           << "] violates strict upper-triangular support";
        throw StructureError(os.str());
      }
    }
  }
  for (int i = 0; i + 1 < L; ++i) {
    const double lse = row_lse(dag.log_trans, i);
    if (!(std::abs(lse) <= kTol)) {
      std::ostringstream os;
      os << "transition row " << (i + 1) << " does not sum to 1 (log-sum " << lse << ")";
      throw NormalizationError(os.str());
    }
  }
  if (L > 1) {
    // terminal row: no outgoing mass at all
    for (int j = 0; j < L; ++j) {
      if (dag.log_trans(L - 1, j) != kNegInf) {
        std::ostringstream os;
        os << "terminal row " << L << " must carry no outgoing mass";
        throw StructureError(os.str());
      }
    }
  }
}

Vec passing_probs(const Dag& dag) {
  const int L = dag.graph_size;
  const Mat trans = dag.trans();
  Vec r = Vec::Zero(L);
  r(0) = 1.0;
  for (int u = 1; u < L; ++u) {
    double acc = 0.0;
    for (int v = 0; v < u; ++v) acc += r(v) * trans(v, u);
    r(u) = acc;
  }
  return r;
}

PrunedView prune_for_export(const Dag& dag, double min_passing, double edge_mass) {
  const int L = dag.graph_size;
  const Vec r = passing_probs(dag);
  const Mat trans = dag.trans();

  PrunedView view;
  std::vector<char> kept(L, 0);
  for (int u = 0; u < L; ++u) {
    if (u == 0 || u == L - 1 || r(u) >= min_passing) {
      kept[u] = 1;
      view.vertices.push_back({u + 1, r(u)});
    }
  }
  for (int u = 0; u < L; ++u) {
    if (!kept[u]) continue;
    std::vector<std::pair<int, double>> out;
    for (int v = u + 1; v < L; ++v)
      if (kept[v] && trans(u, v) > 0.0) out.emplace_back(v, trans(u, v));
    for (const auto& [v, p] : keep_by_mass(std::move(out), edge_mass))
      view.edges.push_back({u + 1, v + 1, p});
  }
  return view;
}

PrunedView prune_view(const PrunedView& view, double min_passing, double edge_mass) {
  if (view.vertices.empty()) return view;
  const int first = view.vertices.front().id;
  const int last = view.vertices.back().id;

  PrunedView out;
  std::map<int, char> kept;
  for (const auto& v : view.vertices) {
    if (v.id == first || v.id == last || v.passing >= min_passing) {
      kept[v.id] = 1;
      out.vertices.push_back(v);
    }
  }
  std::map<int, std::vector<std::pair<int, double>>> by_src;
  for (const auto& e : view.edges)
    if (kept.count(e.from) && kept.count(e.to)) by_src[e.from].emplace_back(e.to, e.prob);
  for (auto& [src, edges] : by_src)
    for (const auto& [v, p] : keep_by_mass(std::move(edges), edge_mass))
      out.edges.push_back({src, v, p});
  return out;
}

DagStats dag_stats(const Dag& dag, double passing_floor, double edge_mass,
                   bool merge_same_token) {
  const int L = dag.graph_size;
  const Mat trans = dag.trans();

  DagStats stats;
  stats.passing_probs = passing_probs(dag);
  stats.max_token_probs = Vec(L);
  std::vector<int> argmax_token(L);
  for (int u = 0; u < L; ++u) {
    int best = 0;
    for (int w = 1; w < dag.vocab_size; ++w)
      if (dag.log_probs(u, w) > dag.log_probs(u, best)) best = w;
    argmax_token[u] = best;
    stats.max_token_probs(u) = std::exp(dag.log_probs(u, best));
  }

  for (int u = 0; u < L; ++u) {
    if (stats.passing_probs(u) < passing_floor) continue;
    std::vector<std::pair<int, double>> out;
    for (int v = u + 1; v < L; ++v)
      if (trans(u, v) > 0.0) out.emplace_back(v, trans(u, v));
    const auto kept = keep_by_mass(std::move(out), edge_mass);
    int degree;
    if (merge_same_token) {
      std::vector<int> toks;
      for (const auto& [v, p] : kept) toks.push_back(argmax_token[v]);
      std::sort(toks.begin(), toks.end());
      degree = static_cast<int>(std::unique(toks.begin(), toks.end()) - toks.begin());
    } else {
      degree = static_cast<int>(kept.size());
    }
    stats.out_degree_hist[degree] += 1;
  }
  return stats;
}

}  // namespace dagdec

#include "dagdec/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace dagdec {

namespace {

std::vector<std::pair<int, double>> top_tokens(const Dag& dag, int vertex, int top_k) {
  std::vector<int> order(dag.vocab_size);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (dag.log_probs(vertex, a) != dag.log_probs(vertex, b))
      return dag.log_probs(vertex, a) > dag.log_probs(vertex, b);
    return a < b;
  });
  std::vector<std::pair<int, double>> out;
  for (int k = 0; k < top_k && k < dag.vocab_size; ++k)
    out.emplace_back(order[k], std::exp(dag.log_probs(vertex, order[k])));
  return out;
}

}  // namespace

std::string dag_to_json(const Dag& dag, const PrunedView& view, const Vocab& vocab,
                        int top_k) {
  nlohmann::json j;
  j["L"] = dag.graph_size;
  j["vocab"] = vocab.tokens;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : view.vertices) {
    nlohmann::json jv;
    jv["id"] = v.id;
    jv["passing"] = v.passing;
    jv["top_tokens"] = nlohmann::json::array();
    for (const auto& [tok, p] : top_tokens(dag, v.id - 1, top_k))
      jv["top_tokens"].push_back({{"token", vocab.token(tok)}, {"p", p}});
    j["vertices"].push_back(std::move(jv));
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : view.edges)
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"p", e.prob}});
  return j.dump(2) + "\n";
}

std::string dag_to_dot(const Dag& dag, const PrunedView& view, const Vocab& vocab,
                       int top_k) {
  // Escapes quotes only; backslash sequences like \n are DOT line breaks.
  const auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '\\';
      q += c;
    }
    return q + "\"";
  };
  std::ostringstream os;
  os << "digraph dag {\n  rankdir=LR;\n  node [shape=box, fontsize=10];\n";
  for (const auto& v : view.vertices) {
    std::ostringstream label;
    label << "v" << v.id;
    for (const auto& [tok, p] : top_tokens(dag, v.id - 1, top_k)) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), " %.2f", p);
      label << "\\n" << vocab.token(tok) << buf;
    }
    os << "  n" << v.id << " [label=" << quote(label.str()) << "];\n";
  }
  for (const auto& e : view.edges) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", e.prob);
    os << "  n" << e.from << " -> n" << e.to << " [label=" << quote(buf) << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace dagdec

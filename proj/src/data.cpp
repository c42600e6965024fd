#include "dagdec/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dagdec/errors.hpp"
#include "dagdec/rng.hpp"

namespace dagdec {

const std::array<const char*, 4> Vocab::kReservedTokens = {"<mask>", "<s>", "</s>", "<pad>"};

namespace {

std::vector<std::string> split_ws(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

Vocab Vocab::from_corpus_tokens(std::vector<std::string> corpus_tokens) {
  std::sort(corpus_tokens.begin(), corpus_tokens.end());
  corpus_tokens.erase(std::unique(corpus_tokens.begin(), corpus_tokens.end()),
                      corpus_tokens.end());
  Vocab v;
  for (const char* r : kReservedTokens) v.tokens.emplace_back(r);
  for (auto& t : corpus_tokens) {
    if (std::find(kReservedTokens.begin(), kReservedTokens.end(), t) != kReservedTokens.end())
      throw ParseError("reserved token '" + t + "' appears in corpus text");
    v.tokens.push_back(std::move(t));
  }
  for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i) v.index[v.tokens[i]] = i;
  return v;
}

int Vocab::id(const std::string& token) const {
  const auto it = index.find(token);
  if (it == index.end()) throw UnknownTokenError("unknown token '" + token + "'");
  return it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw VocabError("token id out of range");
  return tokens[static_cast<size_t>(id)];
}

std::vector<int> Vocab::encode(const std::string& text) const {
  std::vector<int> out;
  for (const auto& t : split_ws(text)) out.push_back(id(t));
  return out;
}

std::string Vocab::decode(std::span<const int> ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += token(ids[i]);
  }
  return out;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& t : tokens) out << t << '\n';
  if (!out) throw IoError("failed writing " + path);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    v.tokens.push_back(line);
  }
  for (size_t r = 0; r < kReservedTokens.size(); ++r)
    if (v.tokens.size() <= r || v.tokens[r] != kReservedTokens[r])
      throw ParseError(path + ": reserved tokens missing or out of order");
  for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i) v.index[v.tokens[i]] = i;
  return v;
}

ParallelCorpus load_corpus(const std::string& path, const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  ParallelCorpus corpus;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fail = [&](const std::string& what) {
      std::ostringstream os;
      os << path << ":" << lineno << ": " << what;
      throw ParseError(os.str());
    };
    if (line.empty()) fail("blank line");
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) fail("expected source<TAB>target");
    if (line.find('\t', tab + 1) != std::string::npos) fail("more than one tab");
    ParallelCorpus::Pair pair;
    pair.source = vocab.encode(line.substr(0, tab));
    const std::vector<int> target = vocab.encode(line.substr(tab + 1));
    if (pair.source.empty()) fail("empty source side");
    if (target.empty()) fail("empty target side");
    pair.target.push_back(Vocab::kBos);
    pair.target.insert(pair.target.end(), target.begin(), target.end());
    pair.target.push_back(Vocab::kEos);
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

Vocab build_vocab(const std::vector<std::string>& corpus_files) {
  if (corpus_files.empty()) throw EmptyCorpusError("no corpus files given");
  std::vector<std::string> tokens;
  for (const auto& path : corpus_files) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
      for (auto& part : split_ws(line)) tokens.push_back(std::move(part));
    }
  }
  if (tokens.empty()) throw EmptyCorpusError("corpus files contain no tokens");
  return Vocab::from_corpus_tokens(std::move(tokens));
}

// ---------------------------------------------------------------------------
// Synthetic task
// ---------------------------------------------------------------------------

void SynthTaskConfig::check() const {
  if (alphabet_size < 1 || alphabet_size > 10)
    throw ConfigError("alphabet_size must be in 1..10");
  if (min_len < 1 || max_len < min_len) throw ConfigError("invalid length range");
  if (synonym_maps < 1 || synonym_maps > 6) throw ConfigError("synonym_maps must be in 1..6");
  if (!order_forward && !order_reverse) throw ConfigError("at least one order transform required");
  if (references_per_source() < 2)
    throw ConfigError("task must be multi-modal: need at least 2 references per source");
  if (train_sources < 1 || eval_sources < 1) throw ConfigError("need at least one source per split");
}

namespace {

constexpr char kMapPrefixes[] = {'x', 'y', 'z', 'w', 'v', 'u'};

std::vector<std::string> make_references(const std::vector<int>& digits,
                                         const SynthTaskConfig& cfg) {
  std::vector<std::string> refs;
  for (int m = 0; m < cfg.synonym_maps; ++m) {
    std::vector<std::string> mapped;
    for (int d : digits) mapped.push_back(std::string(1, kMapPrefixes[m]) + std::to_string(d));
    const auto join = [](const std::vector<std::string>& toks) {
      std::string s;
      for (size_t i = 0; i < toks.size(); ++i) {
        if (i) s += ' ';
        s += toks[i];
      }
      return s;
    };
    if (cfg.order_forward) refs.push_back(join(mapped));
    if (cfg.order_reverse) {
      std::vector<std::string> rev(mapped.rbegin(), mapped.rend());
      refs.push_back(join(rev));
    }
  }
  return refs;
}

}  // namespace

SynthTask gen_synthetic(const SynthTaskConfig& cfg) {
  cfg.check();
  Rng rng(cfg.seed);
  std::set<std::vector<int>> seen;
  const auto draw_source = [&]() {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const int len = rng.randint(cfg.min_len, cfg.max_len);
      std::vector<int> digits(static_cast<size_t>(len));
      for (auto& d : digits) d = rng.randint(0, cfg.alphabet_size - 1);
      if (seen.insert(digits).second) return digits;
    }
    throw ConfigError("source space too small for the requested corpus size");
  };

  SynthTask task;
  for (int s = 0; s < cfg.train_sources + cfg.eval_sources; ++s) {
    const std::vector<int> digits = draw_source();
    SynthPair pair;
    for (size_t i = 0; i < digits.size(); ++i) {
      if (i) pair.source += ' ';
      pair.source += std::to_string(digits[i]);
    }
    pair.references = make_references(digits, cfg);
    (s < cfg.train_sources ? task.train : task.eval).push_back(std::move(pair));
  }
  return task;
}

void write_corpus_tsv(const std::string& path, const std::vector<SynthPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& pair : pairs)
    for (const auto& ref : pair.references) out << pair.source << '\t' << ref << '\n';
  if (!out) throw IoError("failed writing " + path);
}

std::vector<EvalGroup> group_by_source(const ParallelCorpus& corpus) {
  std::vector<EvalGroup> groups;
  for (const auto& pair : corpus.pairs) {
    if (groups.empty() || groups.back().source != pair.source) {
      groups.push_back({pair.source, {}});
    }
    groups.back().references.push_back(pair.target);
  }
  return groups;
}

std::vector<int> strip_wrapping(std::span<const int> tokens) {
  std::vector<int> out;
  size_t start = 0;
  if (!tokens.empty() && tokens[0] == Vocab::kBos) start = 1;
  for (size_t i = start; i < tokens.size(); ++i) {
    if (tokens[i] == Vocab::kEos) break;
    out.push_back(tokens[i]);
  }
  return out;
}

}  // namespace dagdec

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dagdec {

/// Closed vocabulary with fixed reserved entries. Corpus tokens follow the
/// reserved block in lexicographic order, so ids are stable across runs.
struct Vocab {
  static constexpr int kMask = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kPad = 3;
  static const std::array<const char*, 4> kReservedTokens;  // <mask> <s> </s> <pad>

  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;

  static Vocab from_corpus_tokens(std::vector<std::string> corpus_tokens);

  int size() const { return static_cast<int>(tokens.size()); }
  int id(const std::string& token) const;  // throws UnknownTokenError
  const std::string& token(int id) const;

  /// Whitespace tokenization against the closed vocabulary.
  std::vector<int> encode(const std::string& text) const;
  std::string decode(std::span<const int> ids) const;

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);
};

/// Source/target id pairs. Targets are wrapped <s> ... </s> at load time;
/// sources are raw. Sources may repeat with different targets.
struct ParallelCorpus {
  struct Pair {
    std::vector<int> source;
    std::vector<int> target;
  };
  std::vector<Pair> pairs;
};

/// Reads the corpus TSV (one `source<TAB>target` pair per line, UTF-8, LF).
/// Throws ParseError (with the line number) or UnknownTokenError.
ParallelCorpus load_corpus(const std::string& path, const Vocab& vocab);

/// Union of whitespace tokens over the given corpus files, reserved tokens
/// first, the rest sorted.
Vocab build_vocab(const std::vector<std::string>& corpus_files);

// ---------------------------------------------------------------------------
// Synthetic multi-modal task
// ---------------------------------------------------------------------------

/// Each source is a random digit sequence; its reference set applies every
/// combination of a synonym map (digit d -> "x"+d, "y"+d, ...) and a token
/// order (forward / reverse). Several references per source make the task
/// multi-modal by construction.
struct SynthTaskConfig {
  int alphabet_size = 10;  // digit tokens "0".."9"
  int min_len = 3;
  int max_len = 8;
  int synonym_maps = 2;    // <= 6
  bool order_forward = true;
  bool order_reverse = true;
  int train_sources = 2000;
  int eval_sources = 200;
  uint64_t seed = 1;

  int references_per_source() const {
    return synonym_maps * ((order_forward ? 1 : 0) + (order_reverse ? 1 : 0));
  }
  void check() const;  // throws ConfigError; requires references_per_source() >= 2
};

struct SynthPair {
  std::string source;
  std::vector<std::string> references;
};

struct SynthTask {
  std::vector<SynthPair> train;
  std::vector<SynthPair> eval;  // full reference sets, for multi-reference scoring
};

SynthTask gen_synthetic(const SynthTaskConfig& cfg);

/// One `source<TAB>reference` line per reference.
void write_corpus_tsv(const std::string& path, const std::vector<SynthPair>& pairs);

/// Groups consecutive pairs sharing a source into (source, reference set).
struct EvalGroup {
  std::vector<int> source;
  std::vector<std::vector<int>> references;  // wrapped, as loaded
};
std::vector<EvalGroup> group_by_source(const ParallelCorpus& corpus);

/// Strips the leading <s> and everything from the first </s> on.
std::vector<int> strip_wrapping(std::span<const int> tokens);

}  // namespace dagdec

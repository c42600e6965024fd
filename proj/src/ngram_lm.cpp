#include "dagdec/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dagdec/errors.hpp"

namespace dagdec {

std::string NgramLm::pack(std::span<const int> gram) {
  std::string key(gram.size() * sizeof(int32_t), '\0');
  for (size_t i = 0; i < gram.size(); ++i) {
    const int32_t t = gram[i];
    std::memcpy(key.data() + i * sizeof(int32_t), &t, sizeof(int32_t));
  }
  return key;
}

NgramLm NgramLm::fit(const std::vector<std::vector<int>>& corpus, int order,
                     int vocab_size, int bos_id, int eos_id, double backoff_factor) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  if (corpus.empty()) throw EmptyCorpusError("cannot fit an n-gram model on an empty corpus");
  if (vocab_size < 1) throw ConfigError("vocab_size must be >= 1");

  NgramLm lm;
  lm.order_ = order;
  lm.vocab_size_ = vocab_size;
  lm.bos_id_ = bos_id;
  lm.eos_id_ = eos_id;
  lm.backoff_ = backoff_factor;

  std::vector<int> padded;
  for (const auto& seq : corpus) {
    padded.assign(static_cast<size_t>(order - 1), bos_id);
    padded.insert(padded.end(), seq.begin(), seq.end());
    padded.push_back(eos_id);
    const int n = static_cast<int>(padded.size());
    for (int k = 1; k <= order; ++k)
      for (int s = 0; s + k <= n; ++s)
        lm.counts_[pack({padded.data() + s, static_cast<size_t>(k)})] += 1;
    for (int s = 0; s < n; ++s) ++lm.total_unigrams_;
  }
  return lm;
}

long long NgramLm::count(std::span<const int> gram) const {
  const auto it = counts_.find(pack(gram));
  return it == counts_.end() ? 0 : it->second;
}

NgramLm::State NgramLm::begin() const {
  State s;
  s.history.assign(static_cast<size_t>(std::max(0, order_ - 1)), bos_id_);
  return s;
}

double NgramLm::backoff_score(std::span<const int> history, int token) const {
  if (!history.empty()) {
    std::vector<int> gram(history.begin(), history.end());
    gram.push_back(token);
    const long long joint = count(gram);
    if (joint > 0) {
      const long long ctx = count(history);
      if (ctx > 0) return std::log(static_cast<double>(joint) / static_cast<double>(ctx));
    }
    return std::log(backoff_) + backoff_score(history.subspan(1), token);
  }
  // add-1 smoothed unigram floor
  const long long c = count({&token, 1});
  return std::log(static_cast<double>(c + 1) /
                  static_cast<double>(total_unigrams_ + vocab_size_));
}

double NgramLm::score_token(State& state, int token) const {
  if (token == bos_id_) return 0.0;
  const double lp = backoff_score(state.history, token);
  state.history.push_back(token);
  if (static_cast<int>(state.history.size()) > order_ - 1)
    state.history.erase(state.history.begin());
  return lp;
}

double NgramLm::score(std::span<const int> tokens) const {
  State state = begin();
  double total = 0.0;
  for (int t : tokens) total += score_token(state, t);
  return total;
}

void NgramLm::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const char magic[8] = {'D', 'A', 'G', 'D', 'E', 'C', 'L', 'M'};
  out.write(magic, 8);
  const uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  auto put_i32 = [&](int32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  auto put_i64 = [&](int64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put_i32(order_);
  put_i32(vocab_size_);
  put_i32(bos_id_);
  put_i32(eos_id_);
  out.write(reinterpret_cast<const char*>(&backoff_), sizeof(backoff_));
  put_i64(total_unigrams_);
  // sorted records for byte-stable output
  std::vector<std::pair<std::string, long long>> records(counts_.begin(), counts_.end());
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
    return a.first < b.first;
  });
  put_i64(static_cast<int64_t>(records.size()));
  for (const auto& [key, cnt] : records) {
    const uint8_t k = static_cast<uint8_t>(key.size() / sizeof(int32_t));
    out.write(reinterpret_cast<const char*>(&k), 1);
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    put_i64(cnt);
  }
  if (!out) throw IoError("failed writing " + path);
}

NgramLm NgramLm::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "DAGDECLM", 8) != 0)
    throw IoError(path + " is not an n-gram model file");
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != 1) throw IoError("unsupported n-gram model version");
  NgramLm lm;
  auto get_i32 = [&]() { int32_t v; in.read(reinterpret_cast<char*>(&v), sizeof(v)); return v; };
  auto get_i64 = [&]() { int64_t v; in.read(reinterpret_cast<char*>(&v), sizeof(v)); return v; };
  lm.order_ = get_i32();
  lm.vocab_size_ = get_i32();
  lm.bos_id_ = get_i32();
  lm.eos_id_ = get_i32();
  in.read(reinterpret_cast<char*>(&lm.backoff_), sizeof(lm.backoff_));
  lm.total_unigrams_ = get_i64();
  const int64_t n = get_i64();
  for (int64_t r = 0; r < n; ++r) {
    uint8_t k = 0;
    in.read(reinterpret_cast<char*>(&k), 1);
    std::string key(static_cast<size_t>(k) * sizeof(int32_t), '\0');
    in.read(key.data(), static_cast<std::streamsize>(key.size()));
    lm.counts_[key] = get_i64();
  }
  if (!in) throw IoError("truncated n-gram model file " + path);
  return lm;
}

}  // namespace dagdec

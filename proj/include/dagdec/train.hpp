#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dagdec/data.hpp"
#include "dagdec/model.hpp"

namespace dagdec {

struct TrainConfig {
  long long steps = 3000;
  int batch_tokens = 256;      // target tokens per batch (wrapped)
  double peak_lr = 5e-4;
  long long warmup_steps = 500;
  double weight_decay = 0.01;
  double label_smoothing = 0.1;
  Masking glancing = Masking::Adaptive;
  double tau_start = 0.5;
  double tau_end = 0.1;
  bool sum_objective = true;   // marginal (sum) vs best-path (max) loss
  uint64_t seed = 1;

  void check() const;
};

/// Inverse-square-root schedule with linear warmup:
/// lr(s) = peak * min(s / warmup, sqrt(warmup / s)).
double lr_at(const TrainConfig& cfg, long long step);

/// Marginal (or best-path) loss on a DAG whose token rows are smoothed as
/// P' = (1 - eps) P + eps / |V| before the recursion. Returned gradients are
/// with respect to the unsmoothed log P / log E.
struct SmoothedLoss {
  double loss;
  Mat d_log_probs;
  Mat d_log_trans;
};
SmoothedLoss marginal_loss_smoothed(const Dag& dag, std::span<const int> target,
                                    double label_smoothing, bool sum_objective);

struct StepResult {
  double mean_loss = 0.0;
  int skipped = 0;                 // samples with M > L
  std::vector<double> losses;      // per processed sample
};

/// Owns the epoch/batch schedule over a corpus whose sources may carry
/// several references: each epoch draws one reference per source uniformly,
/// shuffles the sources, and packs batches by target token count. Glancing
/// runs two decoder passes per sample; only the second one is differentiated.
class Trainer {
 public:
  Trainer(Model& model, const ParallelCorpus& corpus, const TrainConfig& cfg);

  /// One optimizer update over an explicit batch. Deterministic given
  /// (cfg.seed, step, position in batch), so appending samples to a batch
  /// does not disturb the earlier ones.
  StepResult train_step(std::span<const ParallelCorpus::Pair* const> batch,
                        long long step);

  /// Runs from `start_step` until cfg.steps, invoking on_step after every
  /// update.
  void run(long long start_step,
           const std::function<void(long long, const StepResult&)>& on_step);

  int skipped_total() const { return skipped_total_; }

 private:
  struct Group {
    std::vector<int> source;
    std::vector<std::vector<int>> targets;
  };
  std::vector<std::vector<const ParallelCorpus::Pair*>> epoch_batches(long long epoch);

  Model& model_;
  TrainConfig cfg_;
  std::vector<ParallelCorpus::Pair> pairs_;  // grouped storage, stable addresses
  std::vector<Group> groups_;
  nn::Adam opt_;
  int skipped_total_ = 0;
};

/// Lookahead decoding over grouped evaluation data: exact-match rate against
/// the reference set plus multi-reference BLEU (both on unwrapped tokens).
struct EvalScores {
  double exact_match = 0.0;
  double bleu = 0.0;
};
EvalScores evaluate_lookahead(Model& model, const std::vector<EvalGroup>& groups);

}  // namespace dagdec

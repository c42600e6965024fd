#include "dagdec/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dagdec/decoding.hpp"
#include "dagdec/dp.hpp"
#include "dagdec/errors.hpp"
#include "dagdec/metrics.hpp"

namespace dagdec {

void TrainConfig::check() const {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (warmup_steps < 1 || warmup_steps > steps)
    throw ConfigError("warmup_steps must be in [1, steps]");
  if (batch_tokens < 1) throw ConfigError("batch_tokens must be >= 1");
  if (!(peak_lr > 0.0)) throw ConfigError("peak_lr must be > 0");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
    throw ConfigError("label_smoothing must be in [0, 1)");
  if (!(tau_start >= 0.0 && tau_start <= 1.0 && tau_end >= 0.0 && tau_end <= 1.0))
    throw ConfigError("tau must be in [0, 1]");
}

double lr_at(const TrainConfig& cfg, long long step) {
  const double s = static_cast<double>(std::max<long long>(step, 1));
  const double w = static_cast<double>(cfg.warmup_steps);
  return cfg.peak_lr * std::min(s / w, std::sqrt(w / s));
}

SmoothedLoss marginal_loss_smoothed(const Dag& dag, std::span<const int> target,
                                    double label_smoothing, bool sum_objective) {
  const int L = dag.graph_size;
  const int V = dag.vocab_size;

  Dag smoothed = dag;
  if (label_smoothing > 0.0) {
    const double log_keep = std::log(1.0 - label_smoothing);
    const double log_fill = std::log(label_smoothing / static_cast<double>(V));
    for (int u = 0; u < L; ++u)
      for (int w = 0; w < V; ++w)
        smoothed.log_probs(u, w) = log_add(log_keep + dag.log_probs(u, w), log_fill);
  }

  SmoothedLoss out;
  Mat d_smoothed;
  if (sum_objective) {
    const MarginalResult res = loss_marginal(smoothed, target);
    const DpGrad grad = loss_grad_from(smoothed, target, res.tables);
    out.loss = res.loss;
    d_smoothed = grad.d_log_probs;
    out.d_log_trans = grad.d_log_trans;
  } else {
    const MaxResult res = loss_max(smoothed, target);
    out.loss = res.loss;
    d_smoothed = Mat::Zero(L, V);
    out.d_log_trans = Mat::Zero(L, L);
    for (size_t i = 0; i < target.size(); ++i) {
      d_smoothed(res.best_path[i] - 1, target[i]) -= 1.0;
      if (i > 0) out.d_log_trans(res.best_path[i - 1] - 1, res.best_path[i] - 1) -= 1.0;
    }
  }

  if (label_smoothing > 0.0) {
    // chain rule through log P' = log((1-eps) exp(log P) + eps/|V|)
    const double log_keep = std::log(1.0 - label_smoothing);
    out.d_log_probs = Mat(L, V);
    for (int u = 0; u < L; ++u)
      for (int w = 0; w < V; ++w)
        out.d_log_probs(u, w) =
            d_smoothed(u, w) *
            std::exp(log_keep + dag.log_probs(u, w) - smoothed.log_probs(u, w));
  } else {
    out.d_log_probs = std::move(d_smoothed);
  }
  return out;
}

Trainer::Trainer(Model& model, const ParallelCorpus& corpus, const TrainConfig& cfg)
    : model_(model), cfg_(cfg), opt_(nn::Adam::Config{0.9, 0.98, 1e-9, cfg.weight_decay}) {
  cfg_.check();
  if (corpus.pairs.empty()) throw EmptyCorpusError("training corpus is empty");
  for (const auto& group : group_by_source(corpus)) {
    groups_.push_back({group.source, group.references});
  }
}

std::vector<std::vector<const ParallelCorpus::Pair*>> Trainer::epoch_batches(
    long long epoch) {
  Rng rng(Rng::mix(cfg_.seed, 0x45504f43ULL + static_cast<uint64_t>(epoch)));
  pairs_.clear();
  pairs_.reserve(groups_.size());
  for (const auto& g : groups_) {
    const size_t r = rng.next_below(g.targets.size());
    pairs_.push_back({g.source, g.targets[r]});
  }
  std::vector<size_t> order(pairs_.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<std::vector<const ParallelCorpus::Pair*>> batches;
  std::vector<const ParallelCorpus::Pair*> batch;
  int tokens = 0;
  for (size_t idx : order) {
    batch.push_back(&pairs_[idx]);
    tokens += static_cast<int>(pairs_[idx].target.size());
    if (tokens >= cfg_.batch_tokens) {
      batches.push_back(std::move(batch));
      batch.clear();
      tokens = 0;
    }
  }
  if (!batch.empty()) batches.push_back(std::move(batch));
  return batches;
}

StepResult Trainer::train_step(std::span<const ParallelCorpus::Pair* const> batch,
                               long long step) {
  StepResult result;
  model_.params().zero_grad();

  std::vector<const ParallelCorpus::Pair*> eligible;
  for (const auto* pair : batch) {
    const int L = model_.graph_size_for(static_cast<int>(pair->source.size()));
    if (static_cast<int>(pair->target.size()) > L) {
      ++result.skipped;
      ++skipped_total_;
    } else {
      eligible.push_back(pair);
    }
  }
  if (eligible.empty()) return result;
  const double inv_b = 1.0 / static_cast<double>(eligible.size());
  const double tau = anneal_tau(step, cfg_.steps, cfg_.tau_start, cfg_.tau_end);

  double total = 0.0;
  for (size_t idx = 0; idx < eligible.size(); ++idx) {
    const auto& pair = *eligible[idx];
    const int L = model_.graph_size_for(static_cast<int>(pair.source.size()));
    Rng sample_rng(Rng::mix(cfg_.seed, Rng::mix(static_cast<uint64_t>(step), idx)));

    // pass 1 (not differentiated): the DAG that places the targets
    GlancingInput glance;
    if (cfg_.glancing == Masking::AllMasked) {
      glance.z.assign(static_cast<size_t>(L), kMaskedToken);
    } else {
      const Dag preview = model_.forward(pair.source);
      glance = build_glancing_input(preview, pair.target,
                                    {cfg_.glancing, tau}, sample_rng);
    }

    // pass 2: differentiated
    Model::Trace trace;
    const Dag dag =
        model_.forward(pair.source, &glance, /*training=*/true, &sample_rng, &trace);
    const SmoothedLoss sl = marginal_loss_smoothed(dag, pair.target,
                                                   cfg_.label_smoothing,
                                                   cfg_.sum_objective);
    result.losses.push_back(sl.loss);
    total += sl.loss;
    model_.backward(trace, sl.d_log_probs * inv_b, sl.d_log_trans * inv_b);
  }
  result.mean_loss = total * inv_b;
  opt_.step(model_.params(), lr_at(cfg_, step));
  return result;
}

void Trainer::run(long long start_step,
                  const std::function<void(long long, const StepResult&)>& on_step) {
  long long step = start_step;
  long long epoch = 0;
  while (step < cfg_.steps) {
    for (const auto& batch : epoch_batches(epoch)) {
      ++step;
      const StepResult res = train_step(batch, step);
      on_step(step, res);
      if (step >= cfg_.steps) return;
    }
    ++epoch;
  }
}

EvalScores evaluate_lookahead(Model& model, const std::vector<EvalGroup>& groups) {
  EvalScores scores;
  std::vector<TokenSeq> hyps;
  std::vector<std::vector<TokenSeq>> ref_sets;
  int exact = 0;
  for (const auto& g : groups) {
    const Dag dag = model.forward(g.source);
    const TokenSeq hyp = strip_wrapping(decode_lookahead(dag));
    std::vector<TokenSeq> refs;
    for (const auto& r : g.references) refs.push_back(strip_wrapping(r));
    if (std::find(refs.begin(), refs.end(), hyp) != refs.end()) ++exact;
    hyps.push_back(hyp);
    ref_sets.push_back(std::move(refs));
  }
  if (!groups.empty()) {
    scores.exact_match = static_cast<double>(exact) / static_cast<double>(groups.size());
    scores.bleu = multi_ref_bleu(hyps, ref_sets, /*smooth=*/true).score;
  }
  return scores;
}

}  // namespace dagdec

// dagdec: train, decode, and inspect DAG decoders for non-autoregressive
// sequence generation on a synthetic multi-modal translation task.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "dagdec/data.hpp"
#include "dagdec/decoding.hpp"
#include "dagdec/dp.hpp"
#include "dagdec/errors.hpp"
#include "dagdec/export.hpp"
#include "dagdec/metrics.hpp"
#include "dagdec/model.hpp"
#include "dagdec/ngram_lm.hpp"
#include "dagdec/train.hpp"

namespace {

using namespace dagdec;
using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string source_field(const std::string& line) {
  const size_t tab = line.find('\t');
  return tab == std::string::npos ? line : line.substr(0, tab);
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::string out_dir;
  SynthTaskConfig cfg;
};

void run_gen_data(const GenDataArgs& args) {
  std::filesystem::create_directories(args.out_dir);
  const SynthTask task = gen_synthetic(args.cfg);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(args.out_dir) / name).string();
  };
  write_corpus_tsv(path("train.tsv"), task.train);
  write_corpus_tsv(path("eval.tsv"), task.eval);
  const Vocab vocab = build_vocab({path("train.tsv"), path("eval.tsv")});
  vocab.save(path("vocab.txt"));
  std::cerr << "gen-data: wrote " << task.train.size() << " train sources, "
            << task.eval.size() << " eval sources, vocab of " << vocab.size()
            << " tokens to " << args.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string train_path, valid_path, vocab_path, out_path, log_path, resume_path;
  std::string glancing = "adaptive";
  std::string objective = "sum";
  ModelConfig model;
  TrainConfig train;
  long long eval_every = 500;
};

Masking parse_masking(const std::string& name) {
  if (name == "all") return Masking::AllMasked;
  if (name == "uniform") return Masking::Uniform;
  if (name == "adaptive") return Masking::Adaptive;
  throw ConfigError("unknown glancing strategy '" + name + "'");
}

void run_train(TrainArgs& args) {
  const Vocab vocab = Vocab::load(args.vocab_path);
  const ParallelCorpus corpus = load_corpus(args.train_path, vocab);
  const ParallelCorpus valid = load_corpus(args.valid_path, vocab);
  const auto valid_groups = group_by_source(valid);

  args.model.vocab_size = vocab.size();
  if (args.model.max_source_len <= 0) {
    size_t longest = 1;
    for (const auto& p : corpus.pairs) longest = std::max(longest, p.source.size());
    for (const auto& p : valid.pairs) longest = std::max(longest, p.source.size());
    args.model.max_source_len = static_cast<int>(longest);
  }
  args.train.glancing = parse_masking(args.glancing);
  args.train.sum_objective = args.objective != "max";
  if (args.objective != "max" && args.objective != "sum")
    throw ConfigError("unknown objective '" + args.objective + "'");

  std::unique_ptr<Model> model;
  long long start_step = 0;
  if (!args.resume_path.empty()) {
    LoadedModel loaded = load_checkpoint(args.resume_path);
    model = std::move(loaded.model);
    start_step = loaded.step;
    if (model->config().vocab_size != vocab.size())
      throw ConfigError("checkpoint vocabulary size does not match the vocab file");
  } else {
    model = std::make_unique<Model>(args.model);
  }

  std::cerr << "train: config model_dim=" << model->config().model_dim
            << " heads=" << model->config().num_heads
            << " enc=" << model->config().encoder_layers
            << " dec=" << model->config().decoder_layers
            << " ffn=" << model->config().ffn_dim << " lambda=" << model->config().lambda
            << " max_source_len=" << model->config().max_source_len
            << " dropout=" << model->config().dropout_rate
            << " vocab=" << model->config().vocab_size
            << " | steps=" << args.train.steps << " batch_tokens=" << args.train.batch_tokens
            << " lr=" << args.train.peak_lr << " warmup=" << args.train.warmup_steps
            << " wd=" << args.train.weight_decay << " ls=" << args.train.label_smoothing
            << " glancing=" << args.glancing << " tau=" << args.train.tau_start << ".."
            << args.train.tau_end << " objective=" << args.objective
            << " seed=" << args.train.seed << " start_step=" << start_step << "\n";

  Trainer trainer(*model, corpus, args.train);

  std::ostringstream csv;
  csv << "step,loss,valid_exact_match,valid_bleu\n";
  double window_loss = 0.0;
  long long window_n = 0;
  const auto log_row = [&](long long step) {
    const EvalScores scores = evaluate_lookahead(*model, valid_groups);
    const double loss = window_n > 0 ? window_loss / static_cast<double>(window_n) : 0.0;
    csv << step << "," << loss << "," << scores.exact_match << "," << scores.bleu << "\n";
    std::cerr << "step " << step << " loss " << loss << " valid_em " << scores.exact_match
              << " valid_bleu " << scores.bleu << "\n";
    window_loss = 0.0;
    window_n = 0;
  };

  trainer.run(start_step, [&](long long step, const StepResult& res) {
    window_loss += res.mean_loss;
    window_n += 1;
    if (step % args.eval_every == 0 || step == args.train.steps) log_row(step);
  });
  if (trainer.skipped_total() > 0)
    std::cerr << "train: skipped " << trainer.skipped_total()
              << " samples with target longer than the graph\n";

  save_checkpoint(*model, args.train.steps, args.out_path);
  if (!args.log_path.empty()) write_text(args.log_path, csv.str());
  std::cerr << "train: wrote checkpoint " << args.out_path << "\n";
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string checkpoint, vocab_path, input, out_path, lm_path;
  std::string strategy = "lookahead";
  DecodeConfig cfg;
  int samples = 1;
  uint64_t seed = 1;
};

std::vector<int> decode_one(Model& model, const std::vector<int>& source,
                            const std::string& strategy, const DecodeConfig& cfg,
                            const NgramLm* lm, Rng& rng) {
  const Dag dag = model.forward(source);
  if (strategy == "greedy") return decode_greedy(dag);
  if (strategy == "lookahead") return decode_lookahead(dag);
  if (strategy == "beam") return decode_beam(dag, cfg, lm)[0].tokens;
  if (strategy == "sample") return decode_sample(dag, cfg, rng);
  throw ConfigError("unknown decode strategy '" + strategy + "'");
}

void run_decode(const DecodeArgs& args) {
  const Vocab vocab = Vocab::load(args.vocab_path);
  LoadedModel loaded = load_checkpoint(args.checkpoint);
  Model& model = *loaded.model;
  NgramLm lm;
  const bool have_lm = !args.lm_path.empty();
  if (have_lm) lm = NgramLm::load(args.lm_path);

  std::ostringstream out;
  const auto lines = read_lines(args.input);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::vector<int> source = vocab.encode(source_field(lines[i]));
    if (args.strategy == "sample" && args.samples > 1) {
      for (int s = 0; s < args.samples; ++s) {
        Rng rng(Rng::mix(args.seed, Rng::mix(i, static_cast<uint64_t>(s))));
        if (s) out << '\t';
        out << vocab.decode(strip_wrapping(
            decode_one(model, source, args.strategy, args.cfg, have_lm ? &lm : nullptr, rng)));
      }
      out << '\n';
    } else {
      Rng rng(Rng::mix(args.seed, i));
      out << vocab.decode(strip_wrapping(decode_one(
                 model, source, args.strategy, args.cfg, have_lm ? &lm : nullptr, rng)))
          << '\n';
    }
  }
  write_text(args.out_path, out.str());
  std::cerr << "decode: wrote " << lines.size() << " hypotheses (" << args.strategy
            << ") to " << args.out_path << "\n";
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, vocab_path, corpus_path, report_path, lm_path;
  std::string strategy = "lookahead";
  DecodeConfig cfg;
  int samples = 0;  // 0: match the reference count per source
  uint64_t seed = 1;
  std::vector<double> bucket_edges{0.0, 5.0, 10.0, 20.0};
  bool smooth = true;
};

json bleu_json(const BleuResult& r) {
  return json{{"score", r.score},
              {"precisions", r.precisions},
              {"brevity_penalty", r.brevity_penalty},
              {"hyp_len", r.hyp_len},
              {"ref_len", r.ref_len}};
}

void run_eval(const EvalArgs& args) {
  const Vocab vocab = Vocab::load(args.vocab_path);
  LoadedModel loaded = load_checkpoint(args.checkpoint);
  Model& model = *loaded.model;
  NgramLm lm;
  const bool have_lm = !args.lm_path.empty();
  if (have_lm) lm = NgramLm::load(args.lm_path);

  const ParallelCorpus corpus = load_corpus(args.corpus_path, vocab);
  const auto groups = group_by_source(corpus);
  if (groups.empty()) throw EmptyCorpusError("evaluation corpus is empty");

  std::vector<TokenSeq> hyps, first_refs;
  std::vector<std::vector<TokenSeq>> ref_sets;
  std::vector<std::vector<TokenSeq>> sample_sets;
  double token_acc_sum = 0.0;
  long token_acc_n = 0;
  int exact = 0, multimodal = 0;

  for (size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    const Dag dag = model.forward(group.source);

    std::vector<TokenSeq> refs;
    for (const auto& r : group.references) {
      refs.push_back(strip_wrapping(r));
      token_acc_sum += token_accuracy_best_assignment(dag, r);
      ++token_acc_n;
    }

    Rng rng(Rng::mix(args.seed, g));
    TokenSeq hyp;
    if (args.strategy == "greedy")
      hyp = decode_greedy(dag);
    else if (args.strategy == "lookahead")
      hyp = decode_lookahead(dag);
    else if (args.strategy == "beam")
      hyp = decode_beam(dag, args.cfg, have_lm ? &lm : nullptr)[0].tokens;
    else if (args.strategy == "sample")
      hyp = decode_sample(dag, args.cfg, rng);
    else
      throw ConfigError("unknown decode strategy '" + args.strategy + "'");
    hyp = strip_wrapping(hyp);

    if (std::find(refs.begin(), refs.end(), hyp) != refs.end()) ++exact;

    const int k = args.samples > 0 ? args.samples : static_cast<int>(refs.size());
    std::vector<TokenSeq> samples;
    std::set<TokenSeq> valid_distinct;
    for (int s = 0; s < k; ++s) {
      Rng srng(Rng::mix(args.seed, Rng::mix(g, static_cast<uint64_t>(s))));
      TokenSeq sample = strip_wrapping(decode_sample(dag, args.cfg, srng));
      if (std::find(refs.begin(), refs.end(), sample) != refs.end())
        valid_distinct.insert(sample);
      samples.push_back(std::move(sample));
    }
    if (valid_distinct.size() >= 2) ++multimodal;

    hyps.push_back(hyp);
    first_refs.push_back(refs.front());
    ref_sets.push_back(std::move(refs));
    sample_sets.push_back(std::move(samples));
  }

  json report;
  report["num_sources"] = groups.size();
  report["bleu"] = bleu_json(bleu(hyps, first_refs, args.smooth));
  report["multi_ref"] = bleu_json(multi_ref_bleu(hyps, ref_sets, args.smooth));
  report["pairwise"] = pairwise_bleu(sample_sets, args.smooth);
  report["token_accuracy"] = token_acc_sum / static_cast<double>(token_acc_n);
  report["exact_match"] = static_cast<double>(exact) / static_cast<double>(groups.size());
  report["multi_modality_rate"] =
      static_cast<double>(multimodal) / static_cast<double>(groups.size());
  report["buckets"] = json::array();
  for (const auto& b : bucketed_bleu(hyps, first_refs, args.bucket_edges, args.smooth)) {
    json jb = bleu_json(b.bleu);
    jb["lo"] = b.lo;
    jb["hi"] = std::isfinite(b.hi) ? json(b.hi) : json();
    jb["count"] = b.count;
    report["buckets"].push_back(std::move(jb));
  }
  write_text(args.report_path, report.dump(2) + "\n");
  std::cerr << "eval: exact_match " << report["exact_match"] << " multi_ref "
            << report["multi_ref"]["score"] << " pairwise " << report["pairwise"]
            << " multi_modality_rate " << report["multi_modality_rate"] << "\n";
}

// ---------------------------------------------------------------------------
// lm-train
// ---------------------------------------------------------------------------

struct LmTrainArgs {
  std::string corpus_path, vocab_path, out_path;
  int order = 3;
  double backoff = 0.4;
};

void run_lm_train(const LmTrainArgs& args) {
  const Vocab vocab = Vocab::load(args.vocab_path);
  const ParallelCorpus corpus = load_corpus(args.corpus_path, vocab);
  std::vector<std::vector<int>> targets;
  for (const auto& pair : corpus.pairs) targets.push_back(strip_wrapping(pair.target));
  const NgramLm lm = NgramLm::fit(targets, args.order, vocab.size(), Vocab::kBos,
                                  Vocab::kEos, args.backoff);
  lm.save(args.out_path);
  std::cerr << "lm-train: order " << args.order << " over " << targets.size()
            << " sentences -> " << args.out_path << "\n";
}

// ---------------------------------------------------------------------------
// export-dag
// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string checkpoint, vocab_path, source, out_prefix;
  double min_passing = 0.1;
  double edge_mass = 0.9;
  int top_k = 3;
};

void run_export(const ExportArgs& args) {
  const Vocab vocab = Vocab::load(args.vocab_path);
  LoadedModel loaded = load_checkpoint(args.checkpoint);
  const Dag dag = loaded.model->forward(vocab.encode(args.source));
  const PrunedView view = prune_for_export(dag, args.min_passing, args.edge_mass);
  write_text(args.out_prefix + ".json", dag_to_json(dag, view, vocab, args.top_k));
  write_text(args.out_prefix + ".dot", dag_to_dot(dag, view, vocab, args.top_k));
  std::cerr << "export-dag: " << view.vertices.size() << " vertices, "
            << view.edges.size() << " edges -> " << args.out_prefix << ".{json,dot}\n";
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string checkpoint, vocab_path, corpus_path, out_path;
  double passing_floor = 0.2;
  double edge_mass = 0.8;
  bool merge = true;
};

void run_stats(const StatsArgs& args) {
  const Vocab vocab = Vocab::load(args.vocab_path);
  LoadedModel loaded = load_checkpoint(args.checkpoint);
  Model& model = *loaded.model;
  const ParallelCorpus corpus = load_corpus(args.corpus_path, vocab);
  const auto groups = group_by_source(corpus);

  std::map<int, long> degree_hist;
  long vertices = 0, high_passing = 0, confident_bypass = 0, unlearned = 0;
  for (const auto& group : groups) {
    const Dag dag = model.forward(group.source);
    const DagStats stats = dag_stats(dag, args.passing_floor, args.edge_mass, args.merge);
    for (const auto& [deg, n] : stats.out_degree_hist) degree_hist[deg] += n;
    for (int u = 0; u < dag.graph_size; ++u) {
      ++vertices;
      const double r = stats.passing_probs(u);
      const double p = stats.max_token_probs(u);
      if (r > 0.5) ++high_passing;
      if (r < 0.5 && p > 0.5) ++confident_bypass;
      if (r < 0.2 && p < 0.2) ++unlearned;
    }
  }
  json report;
  report["num_graphs"] = groups.size();
  report["num_vertices"] = vertices;
  report["passing_floor"] = args.passing_floor;
  report["edge_mass"] = args.edge_mass;
  report["merge_same_token"] = args.merge;
  report["out_degree_hist"] = json::object();
  for (const auto& [deg, n] : degree_hist)
    report["out_degree_hist"][std::to_string(deg)] = n;
  const double denom = vertices > 0 ? static_cast<double>(vertices) : 1.0;
  report["categories"] = {
      {"passing_gt_0.5", high_passing / denom},
      {"passing_lt_0.5_max_token_gt_0.5", confident_bypass / denom},
      {"passing_lt_0.2_max_token_lt_0.2", unlearned / denom}};
  write_text(args.out_path, report.dump(2) + "\n");
  std::cerr << "stats: " << groups.size() << " graphs, " << vertices << " vertices -> "
            << args.out_path << "\n";
}

void add_decode_flags(CLI::App* cmd, DecodeConfig& cfg) {
  cmd->add_option("--alpha", cfg.alpha, "length-penalty exponent");
  cmd->add_option("--gamma", cfg.gamma, "language-model weight");
  cmd->add_option("--beam-size", cfg.beam_size, "overall beam cap");
  cmd->add_option("--per-length-cap", cfg.per_length_cap, "per-length beam cap");
  cmd->add_option("--expand-top-k", cfg.expand_top_k, "candidates per expansion");
  cmd->add_option("--top-p", cfg.top_p, "nucleus mass for sampling");
  cmd->add_option("--temperature", cfg.temperature, "sampling temperature");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAG decoder for non-autoregressive sequence generation"};
  app.set_config("--config", "", "flat key=value configuration file");
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-data", "generate the synthetic multi-modal corpus");
  cmd_gen->add_option("--out-dir", gen.out_dir, "output directory")->required();
  cmd_gen->add_option("--train-sources", gen.cfg.train_sources, "training sources");
  cmd_gen->add_option("--eval-sources", gen.cfg.eval_sources, "held-out sources");
  cmd_gen->add_option("--min-len", gen.cfg.min_len, "minimum source length");
  cmd_gen->add_option("--max-len", gen.cfg.max_len, "maximum source length");
  cmd_gen->add_option("--alphabet", gen.cfg.alphabet_size, "digit alphabet size");
  cmd_gen->add_option("--maps", gen.cfg.synonym_maps, "synonym maps");
  cmd_gen->add_flag("!--no-forward", gen.cfg.order_forward, "drop the forward order");
  cmd_gen->add_flag("!--no-reverse", gen.cfg.order_reverse, "drop the reversed order");
  cmd_gen->add_option("--seed", gen.cfg.seed, "rng seed")->envname("DAGDEC_SEED");

  TrainArgs tr;
  auto* cmd_train = app.add_subcommand("train", "train a model");
  cmd_train->add_option("--train", tr.train_path, "training corpus TSV")->required();
  cmd_train->add_option("--valid", tr.valid_path, "validation corpus TSV")->required();
  cmd_train->add_option("--vocab", tr.vocab_path, "vocabulary file")->required();
  cmd_train->add_option("--out", tr.out_path, "checkpoint output path")->required();
  cmd_train->add_option("--log", tr.log_path, "metrics CSV output path");
  cmd_train->add_option("--resume", tr.resume_path, "checkpoint to resume from");
  cmd_train->add_option("--dim", tr.model.model_dim, "model dimension");
  cmd_train->add_option("--heads", tr.model.num_heads, "attention heads");
  cmd_train->add_option("--enc-layers", tr.model.encoder_layers, "encoder layers");
  cmd_train->add_option("--dec-layers", tr.model.decoder_layers, "decoder layers");
  cmd_train->add_option("--ffn-dim", tr.model.ffn_dim, "feed-forward dimension");
  cmd_train->add_option("--lambda", tr.model.lambda, "graph-size multiplier");
  cmd_train->add_option("--max-source-len", tr.model.max_source_len,
                        "positional table size (0: longest corpus source)")
      ->default_val(0);
  cmd_train->add_option("--dropout", tr.model.dropout_rate, "dropout rate");
  cmd_train->add_option("--steps", tr.train.steps, "optimizer steps");
  cmd_train->add_option("--batch-tokens", tr.train.batch_tokens, "target tokens per batch");
  cmd_train->add_option("--lr", tr.train.peak_lr, "peak learning rate");
  cmd_train->add_option("--warmup", tr.train.warmup_steps, "warmup steps");
  cmd_train->add_option("--weight-decay", tr.train.weight_decay, "decoupled weight decay");
  cmd_train->add_option("--label-smoothing", tr.train.label_smoothing, "label smoothing");
  cmd_train->add_option("--glancing", tr.glancing, "glancing strategy: all|uniform|adaptive");
  cmd_train->add_option("--tau-start", tr.train.tau_start, "glancing tau at step 0");
  cmd_train->add_option("--tau-end", tr.train.tau_end, "glancing tau at the final step");
  cmd_train->add_option("--objective", tr.objective, "path aggregation: sum|max");
  cmd_train->add_option("--eval-every", tr.eval_every, "validation interval (steps)");
  cmd_train->add_option("--seed", tr.train.seed, "rng seed")->envname("DAGDEC_SEED");

  DecodeArgs dec;
  auto* cmd_decode = app.add_subcommand("decode", "decode hypotheses for input sources");
  cmd_decode->add_option("--checkpoint", dec.checkpoint, "model checkpoint")->required();
  cmd_decode->add_option("--vocab", dec.vocab_path, "vocabulary file")->required();
  cmd_decode->add_option("--input", dec.input, "source lines (text or TSV)")->required();
  cmd_decode->add_option("--out", dec.out_path, "hypotheses output path")->required();
  cmd_decode->add_option("--decode", dec.strategy, "greedy|lookahead|beam|sample");
  cmd_decode->add_option("--lm", dec.lm_path, "n-gram model for beam fusion");
  cmd_decode->add_option("--k", dec.samples, "samples per line (sample strategy)");
  cmd_decode->add_option("--seed", dec.seed, "rng seed")->envname("DAGDEC_SEED");
  add_decode_flags(cmd_decode, dec.cfg);

  EvalArgs ev;
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a grouped corpus");
  cmd_eval->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
  cmd_eval->add_option("--vocab", ev.vocab_path, "vocabulary file")->required();
  cmd_eval->add_option("--corpus", ev.corpus_path, "evaluation corpus TSV")->required();
  cmd_eval->add_option("--report", ev.report_path, "JSON report output path")->required();
  cmd_eval->add_option("--decode", ev.strategy, "greedy|lookahead|beam|sample");
  cmd_eval->add_option("--lm", ev.lm_path, "n-gram model for beam fusion");
  cmd_eval->add_option("--samples", ev.samples,
                       "nucleus samples per source (0: reference count)");
  cmd_eval->add_option("--bucket-edges", ev.bucket_edges, "reference-length bucket edges");
  cmd_eval->add_flag("!--no-smooth", ev.smooth, "disable add-1 BLEU smoothing");
  cmd_eval->add_option("--seed", ev.seed, "rng seed")->envname("DAGDEC_SEED");
  add_decode_flags(cmd_eval, ev.cfg);

  LmTrainArgs lmt;
  auto* cmd_lm = app.add_subcommand("lm-train", "fit an n-gram model on the target side");
  cmd_lm->add_option("--corpus", lmt.corpus_path, "corpus TSV")->required();
  cmd_lm->add_option("--vocab", lmt.vocab_path, "vocabulary file")->required();
  cmd_lm->add_option("--out", lmt.out_path, "model output path")->required();
  cmd_lm->add_option("--order", lmt.order, "n-gram order");
  cmd_lm->add_option("--backoff", lmt.backoff, "stupid-backoff factor");

  ExportArgs ex;
  auto* cmd_export = app.add_subcommand("export-dag", "export one source's DAG as JSON + DOT");
  cmd_export->add_option("--checkpoint", ex.checkpoint, "model checkpoint")->required();
  cmd_export->add_option("--vocab", ex.vocab_path, "vocabulary file")->required();
  cmd_export->add_option("--source", ex.source, "source sentence")->required();
  cmd_export->add_option("--out-prefix", ex.out_prefix, "output path prefix")->required();
  cmd_export->add_option("--min-passing", ex.min_passing, "drop vertices below this");
  cmd_export->add_option("--edge-mass", ex.edge_mass, "per-vertex cumulative edge mass");
  cmd_export->add_option("--top-k", ex.top_k, "tokens per vertex label");

  StatsArgs st;
  auto* cmd_stats = app.add_subcommand("stats", "aggregate DAG statistics over a corpus");
  cmd_stats->add_option("--checkpoint", st.checkpoint, "model checkpoint")->required();
  cmd_stats->add_option("--vocab", st.vocab_path, "vocabulary file")->required();
  cmd_stats->add_option("--corpus", st.corpus_path, "corpus TSV")->required();
  cmd_stats->add_option("--out", st.out_path, "JSON output path")->required();
  cmd_stats->add_option("--passing-floor", st.passing_floor, "ignore vertices below this");
  cmd_stats->add_option("--edge-mass", st.edge_mass, "per-vertex cumulative edge mass");
  cmd_stats->add_flag("!--no-merge", st.merge, "do not merge same-token edges");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gen->parsed()) run_gen_data(gen);
    if (cmd_train->parsed()) {
      tr.train.check();  // surface config errors before touching files
      run_train(tr);
    }
    if (cmd_decode->parsed()) run_decode(dec);
    if (cmd_eval->parsed()) run_eval(ev);
    if (cmd_lm->parsed()) run_lm_train(lmt);
    if (cmd_export->parsed()) run_export(ex);
    if (cmd_stats->parsed()) run_stats(st);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

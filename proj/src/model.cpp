#include "dagdec/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dagdec/errors.hpp"

namespace dagdec {

void ModelConfig::check() const {
  if (model_dim < 1) throw ConfigError("model_dim must be >= 1");
  if (num_heads < 1 || model_dim % num_heads != 0)
    throw ConfigError("model_dim must be divisible by num_heads");
  if (encoder_layers < 0 || decoder_layers < 0) throw ConfigError("negative layer count");
  if (ffn_dim < 1) throw ConfigError("ffn_dim must be >= 1");
  if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (lambda < 2) throw ConfigError("lambda must be >= 2");
  if (max_source_len < 1) throw ConfigError("max_source_len must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ConfigError("dropout_rate must be in [0, 1)");
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.check();
  Rng rng(cfg_.seed);
  const int d = cfg_.model_dim;
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(d));

  tok_emb_ = ps_.add("tok_emb", cfg_.vocab_size, d);
  src_pos_ = ps_.add("src_pos", cfg_.max_source_len, d);
  graph_pos_ = ps_.add("graph_pos", cfg_.lambda * cfg_.max_source_len, d);
  for (int h : {tok_emb_, src_pos_, graph_pos_}) {
    Mat& m = ps_.at(h).value;
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) m(i, j) = rng.normal(0.0, emb_std);
  }

  for (int l = 0; l < cfg_.encoder_layers; ++l)
    enc_blocks_.push_back(nn::EncoderBlock::create(
        ps_, "enc." + std::to_string(l), d, cfg_.num_heads, cfg_.ffn_dim, rng));
  enc_final_ = nn::LayerNorm::create(ps_, "enc.final_ln", d);

  for (int l = 0; l < cfg_.decoder_layers; ++l)
    dec_blocks_.push_back(nn::DecoderBlock::create(
        ps_, "dec." + std::to_string(l), d, cfg_.num_heads, cfg_.ffn_dim, rng));
  dec_final_ = nn::LayerNorm::create(ps_, "dec.final_ln", d);

  trans_q_ = nn::Linear::create(ps_, "trans_q", d, d, false, rng);
  trans_k_ = nn::Linear::create(ps_, "trans_k", d, d, false, rng);
  token_proj_ = nn::Linear::create(ps_, "token_proj", d, cfg_.vocab_size, false, rng);
}

int Model::graph_size_for(int source_len) const {
  const int table = cfg_.lambda * cfg_.max_source_len;
  return std::min(cfg_.lambda * source_len, table);
}

Mat Model::encode(std::span<const int> source, bool training, Rng* rng,
                  EncoderTrace* trace) {
  const int n = static_cast<int>(source.size());
  if (n < 1) throw LengthError("empty source");
  if (n > cfg_.max_source_len) {
    std::ostringstream os;
    os << "source length " << n << " exceeds max_source_len " << cfg_.max_source_len;
    throw LengthError(os.str());
  }
  const int d = cfg_.model_dim;
  const double scale = std::sqrt(static_cast<double>(d));
  const Mat& emb = ps_.at(tok_emb_).value;
  const Mat& pos = ps_.at(src_pos_).value;

  Mat x(n, d);
  for (int t = 0; t < n; ++t) {
    if (source[t] < 0 || source[t] >= cfg_.vocab_size)
      throw VocabError("source token id out of range");
    x.row(t) = emb.row(source[t]) * scale + pos.row(t);
  }
  const double p = training ? cfg_.dropout_rate : 0.0;
  x = nn::dropout_forward(x, p, training ? rng : nullptr, trace ? &trace->in_drop : nullptr);
  if (trace) {
    trace->source.assign(source.begin(), source.end());
    trace->input = x;
    trace->blocks.resize(enc_blocks_.size());
  }
  for (size_t l = 0; l < enc_blocks_.size(); ++l)
    x = enc_blocks_[l].forward(ps_, x, p, training ? rng : nullptr,
                               trace ? &trace->blocks[l] : nullptr);
  x = enc_final_.forward(ps_, x, trace ? &trace->final_ln : nullptr);
  if (trace) trace->output = x;
  return x;
}

Mat Model::decoder_input(int graph_size, const GlancingInput* glancing) const {
  const int d = cfg_.model_dim;
  const double scale = std::sqrt(static_cast<double>(d));
  const Mat& emb = ps_.at(tok_emb_).value;
  Mat x = ps_.at(graph_pos_).value.topRows(graph_size);
  if (glancing) {
    if (static_cast<int>(glancing->z.size()) != graph_size)
      throw LengthError("glancing input length does not match the graph size");
    for (int u = 0; u < graph_size; ++u) {
      const int tok = glancing->z[static_cast<size_t>(u)];
      if (tok == kMaskedToken) continue;  // masked vertices add a zero vector
      if (tok < 0 || tok >= cfg_.vocab_size)
        throw VocabError("glancing token id out of range");
      x.row(u) += emb.row(tok) * scale;
    }
  }
  return x;
}

Dag Model::decode_dag(const Mat& encoder_states, int graph_size,
                      const GlancingInput* glancing, bool training, Rng* rng,
                      DecoderTrace* trace) {
  const int L = graph_size;
  const int d = cfg_.model_dim;
  if (L < 1 || L > cfg_.lambda * cfg_.max_source_len)
    throw LengthError("graph size outside the graph-positional table");

  Mat x = decoder_input(L, glancing);
  const double p = training ? cfg_.dropout_rate : 0.0;
  x = nn::dropout_forward(x, p, training ? rng : nullptr, trace ? &trace->in_drop : nullptr);
  if (trace) {
    trace->z = glancing ? glancing->z : std::vector<int>();
    trace->input = x;
    trace->blocks.resize(dec_blocks_.size());
  }
  for (size_t l = 0; l < dec_blocks_.size(); ++l)
    x = dec_blocks_[l].forward(ps_, x, encoder_states, p, training ? rng : nullptr,
                               trace ? &trace->blocks[l] : nullptr);
  x = dec_final_.forward(ps_, x, trace ? &trace->final_ln : nullptr);

  const Mat q = trans_q_.forward(ps_, x);
  const Mat k = trans_k_.forward(ps_, x);
  const Mat scores = q * k.transpose() / std::sqrt(static_cast<double>(d));

  Dag dag;
  dag.graph_size = L;
  dag.vocab_size = cfg_.vocab_size;
  dag.log_trans = Mat::Constant(L, L, kNegInf);
  for (int i = 0; i + 1 < L; ++i) {
    double mx = kNegInf;
    for (int j = i + 1; j < L; ++j) mx = std::max(mx, scores(i, j));
    double z = 0.0;
    for (int j = i + 1; j < L; ++j) z += std::exp(scores(i, j) - mx);
    const double log_z = mx + std::log(z);
    for (int j = i + 1; j < L; ++j) dag.log_trans(i, j) = scores(i, j) - log_z;
  }

  const Mat logits = token_proj_.forward(ps_, x);
  dag.log_probs = Mat(L, cfg_.vocab_size);
  for (int u = 0; u < L; ++u) {
    const double mx = logits.row(u).maxCoeff();
    const double log_z =
        mx + std::log((logits.row(u).array() - mx).exp().sum());
    dag.log_probs.row(u) = logits.row(u).array() - log_z;
  }

  if (trace) {
    trace->states = x;
    trace->trans_q = q;
    trace->trans_k = k;
    trace->trans_probs = dag.log_trans.array().exp();
    trace->token_probs = dag.log_probs.array().exp();
  }
  return dag;
}

Dag Model::forward(std::span<const int> source, const GlancingInput* glancing,
                   bool training, Rng* rng, Trace* trace) {
  const Mat enc = encode(source, training, rng, trace ? &trace->enc : nullptr);
  return decode_dag(enc, graph_size_for(static_cast<int>(source.size())), glancing,
                    training, rng, trace ? &trace->dec : nullptr);
}

void Model::backward(const Trace& trace, const Mat& d_log_probs, const Mat& d_log_trans) {
  const int L = static_cast<int>(trace.dec.states.rows());
  const int d = cfg_.model_dim;
  const double scale = std::sqrt(static_cast<double>(d));

  // token head: log-softmax backward, then the projection
  Mat dlogits(L, cfg_.vocab_size);
  for (int u = 0; u < L; ++u) {
    const double s = d_log_probs.row(u).sum();
    dlogits.row(u) = d_log_probs.row(u) - s * trace.dec.token_probs.row(u);
  }
  Mat dstates = token_proj_.backward(ps_, trace.dec.states, dlogits);

  // transition head: masked log-softmax backward on rows 1..L-1
  Mat dscores = Mat::Zero(L, L);
  for (int i = 0; i + 1 < L; ++i) {
    double s = 0.0;
    for (int j = i + 1; j < L; ++j) s += d_log_trans(i, j);
    for (int j = i + 1; j < L; ++j)
      dscores(i, j) = d_log_trans(i, j) - s * trace.dec.trans_probs(i, j);
  }
  const Mat dq = dscores * trace.dec.trans_k / scale;
  const Mat dk = dscores.transpose() * trace.dec.trans_q / scale;
  dstates += trans_q_.backward(ps_, trace.dec.states, dq);
  dstates += trans_k_.backward(ps_, trace.dec.states, dk);

  // decoder stack
  Mat dx = dec_final_.backward(ps_, trace.dec.final_ln, dstates);
  Mat d_enc = Mat::Zero(trace.enc.output.rows(), trace.enc.output.cols());
  for (size_t l = dec_blocks_.size(); l-- > 0;)
    dx = dec_blocks_[l].backward(ps_, trace.dec.blocks[l], dx, d_enc);
  dx = nn::dropout_backward(dx, trace.dec.in_drop);
  ps_.at(graph_pos_).grad.topRows(L) += dx;
  if (!trace.dec.z.empty()) {
    for (int u = 0; u < L; ++u) {
      const int tok = trace.dec.z[static_cast<size_t>(u)];
      if (tok != kMaskedToken) ps_.at(tok_emb_).grad.row(tok) += dx.row(u) * scale;
    }
  }

  // encoder stack
  Mat de = enc_final_.backward(ps_, trace.enc.final_ln, d_enc);
  for (size_t l = enc_blocks_.size(); l-- > 0;)
    de = enc_blocks_[l].backward(ps_, trace.enc.blocks[l], de);
  de = nn::dropout_backward(de, trace.enc.in_drop);
  for (size_t t = 0; t < trace.enc.source.size(); ++t) {
    ps_.at(tok_emb_).grad.row(trace.enc.source[t]) += de.row(static_cast<int>(t)) * scale;
    ps_.at(src_pos_).grad.row(static_cast<int>(t)) += de.row(static_cast<int>(t));
  }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'A', 'G', 'D', 'E', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

std::string config_text(const ModelConfig& cfg, long long step) {
  std::ostringstream os;
  os << "model_dim=" << cfg.model_dim << "\n"
     << "num_heads=" << cfg.num_heads << "\n"
     << "encoder_layers=" << cfg.encoder_layers << "\n"
     << "decoder_layers=" << cfg.decoder_layers << "\n"
     << "ffn_dim=" << cfg.ffn_dim << "\n"
     << "vocab_size=" << cfg.vocab_size << "\n"
     << "lambda=" << cfg.lambda << "\n"
     << "max_source_len=" << cfg.max_source_len << "\n"
     << "dropout_rate=" << cfg.dropout_rate << "\n"
     << "seed=" << cfg.seed << "\n"
     << "step=" << step << "\n";
  return os.str();
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

void save_checkpoint(const Model& model, long long step, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  const std::string cfg = config_text(model.config(), step);
  const uint32_t cfg_len = static_cast<uint32_t>(cfg.size());
  out.write(reinterpret_cast<const char*>(&cfg_len), sizeof(cfg_len));
  out.write(cfg.data(), cfg_len);

  const auto& entries = model.params().entries();
  const uint32_t n = static_cast<uint32_t>(entries.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (const auto& e : entries) {
    const uint16_t name_len = static_cast<uint16_t>(e.name.size());
    out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    out.write(e.name.data(), name_len);
    const uint8_t dtype = 0;  // f64
    const uint8_t ndim = 2;
    out.write(reinterpret_cast<const char*>(&dtype), 1);
    out.write(reinterpret_cast<const char*>(&ndim), 1);
    const uint64_t rows = static_cast<uint64_t>(e.value.rows());
    const uint64_t cols = static_cast<uint64_t>(e.value.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    for (int i = 0; i < e.value.rows(); ++i)
      for (int j = 0; j < e.value.cols(); ++j) {
        const double v = e.value(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  }
  if (!out) throw IoError("failed writing " + path);
}

LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError(path + ": not a checkpoint file (bad magic)");
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kVersion) {
    std::ostringstream os;
    os << path << ": checkpoint format version mismatch (found " << version
       << ", expected " << kVersion << ")";
    throw IoError(os.str());
  }
  uint32_t cfg_len = 0;
  in.read(reinterpret_cast<char*>(&cfg_len), sizeof(cfg_len));
  std::string cfg_str(cfg_len, '\0');
  in.read(cfg_str.data(), cfg_len);
  if (!in) throw IoError(path + ": truncated checkpoint header");
  const auto kv = parse_config_text(cfg_str);
  const auto field = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end())
      throw IoError(std::string(path) + ": checkpoint config is missing " + key);
    return it->second;
  };

  ModelConfig cfg;
  cfg.model_dim = std::stoi(field("model_dim"));
  cfg.num_heads = std::stoi(field("num_heads"));
  cfg.encoder_layers = std::stoi(field("encoder_layers"));
  cfg.decoder_layers = std::stoi(field("decoder_layers"));
  cfg.ffn_dim = std::stoi(field("ffn_dim"));
  cfg.vocab_size = std::stoi(field("vocab_size"));
  cfg.lambda = std::stoi(field("lambda"));
  cfg.max_source_len = std::stoi(field("max_source_len"));
  cfg.dropout_rate = std::stod(field("dropout_rate"));
  cfg.seed = std::stoull(field("seed"));

  LoadedModel loaded;
  loaded.step = std::stoll(field("step"));
  loaded.model = std::make_unique<Model>(cfg);

  auto& entries = loaded.model->params().entries();
  std::map<std::string, size_t> by_name;
  for (size_t i = 0; i < entries.size(); ++i) by_name[entries[i].name] = i;

  uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (n != entries.size()) throw IoError(path + ": parameter count mismatch");
  for (uint32_t a = 0; a < n; ++a) {
    uint16_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    uint8_t dtype = 0, ndim = 0;
    in.read(reinterpret_cast<char*>(&dtype), 1);
    in.read(reinterpret_cast<char*>(&ndim), 1);
    uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw IoError(path + ": unexpected array " + name);
    Mat& value = entries[it->second].value;
    if (dtype != 0 || ndim != 2 || static_cast<long>(rows) != value.rows() ||
        static_cast<long>(cols) != value.cols())
      throw IoError(path + ": shape mismatch for array " + name);
    for (uint64_t i = 0; i < rows; ++i)
      for (uint64_t j = 0; j < cols; ++j) {
        double v;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        value(static_cast<long>(i), static_cast<long>(j)) = v;
      }
  }
  if (!in) throw IoError(path + ": truncated checkpoint payload");
  return loaded;
}

}  // namespace dagdec

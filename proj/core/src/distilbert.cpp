#include "stancecred/distilbert.hpp"

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "stancecred/errors.hpp"
#include "stancecred/util.hpp"

namespace stancecred {

namespace {

namespace fs = std::filesystem;

Eigen::MatrixXf take_matrix(const SafeTensors& st, const std::string& name,
                            const std::string& prefix) {
  if (st.contains(name)) return st.matrix(name);
  if (st.contains(prefix + name)) return st.matrix(prefix + name);
  throw EncoderUnavailableError("checkpoint is missing tensor " + name);
}

Eigen::RowVectorXf take_rowvec(const SafeTensors& st, const std::string& name,
                               const std::string& prefix) {
  Eigen::MatrixXf m = take_matrix(st, name, prefix);
  if (m.rows() != 1)
    throw EncoderUnavailableError("tensor " + name + " is not a vector");
  return m.row(0);
}

void layer_norm_inplace(Eigen::MatrixXf& x, const Eigen::RowVectorXf& gamma,
                        const Eigen::RowVectorXf& beta) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const float mu = x.row(i).mean();
    const float var = (x.row(i).array() - mu).square().mean();
    const float inv = 1.0f / std::sqrt(var + static_cast<float>(DistilBert::kLayerNormEps));
    x.row(i) = (((x.row(i).array() - mu) * inv) * gamma.array() + beta.array()).matrix();
  }
}

void softmax_rows_inplace(Eigen::MatrixXf& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::ArrayXf row = x.row(i).array();
    Eigen::ArrayXf e = (row - row.maxCoeff()).exp();
    x.row(i) = (e / e.sum()).matrix();
  }
}

constexpr float kInvSqrt2f = 0.70710678118654752f;

}  // namespace

DistilBert DistilBert::load(const std::string& checkpoint_dir) {
  const fs::path dir(checkpoint_dir);
  if (!fs::is_directory(dir))
    throw EncoderUnavailableError("checkpoint directory not found: " + checkpoint_dir);

  fs::path weights = dir / "model.safetensors";
  if (!fs::exists(weights)) {
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".safetensors") {
        weights = entry.path();
        break;
      }
  }
  if (!fs::exists(weights))
    throw EncoderUnavailableError("no .safetensors weights in " + checkpoint_dir);
  const fs::path vocab = dir / "vocab.txt";
  if (!fs::exists(vocab))
    throw EncoderUnavailableError("no vocab.txt in " + checkpoint_dir);

  DistilBert model;
  SafeTensors st = SafeTensors::load(weights.string());
  const std::string prefix = "distilbert.";

  model.word_emb_ = take_matrix(st, "embeddings.word_embeddings.weight", prefix);
  model.pos_emb_ = take_matrix(st, "embeddings.position_embeddings.weight", prefix);
  model.emb_g_ = take_rowvec(st, "embeddings.LayerNorm.weight", prefix);
  model.emb_b_ = take_rowvec(st, "embeddings.LayerNorm.bias", prefix);

  DistilBertConfig cfg;
  cfg.dim = static_cast<int>(model.word_emb_.cols());
  cfg.vocab_size = static_cast<int>(model.word_emb_.rows());
  cfg.max_position = static_cast<int>(model.pos_emb_.rows());
  cfg.n_layers = 0;
  while (st.contains("transformer.layer." + std::to_string(cfg.n_layers) +
                     ".attention.q_lin.weight") ||
         st.contains(prefix + "transformer.layer." + std::to_string(cfg.n_layers) +
                     ".attention.q_lin.weight"))
    ++cfg.n_layers;
  if (cfg.n_layers == 0)
    throw EncoderUnavailableError("checkpoint has no transformer layers");

  const fs::path cfg_path = dir / "config.json";
  if (fs::exists(cfg_path)) {
    try {
      nlohmann::json j = nlohmann::json::parse(read_file(cfg_path.string()));
      cfg.n_heads = j.value("n_heads", 12);
      cfg.hidden_dim = j.value("hidden_dim", 4 * cfg.dim);
      if (j.contains("dim") && j["dim"].get<int>() != cfg.dim)
        throw EncoderUnavailableError("config.json dim disagrees with weights");
      if (j.contains("n_layers") && j["n_layers"].get<int>() != cfg.n_layers)
        throw EncoderUnavailableError("config.json n_layers disagrees with weights");
    } catch (const nlohmann::json::exception& e) {
      throw EncoderUnavailableError("malformed checkpoint config.json: " + std::string(e.what()));
    }
  } else {
    cfg.n_heads = 12;
    cfg.hidden_dim = 4 * cfg.dim;
  }
  if (cfg.dim % cfg.n_heads != 0)
    throw EncoderUnavailableError("hidden dim is not divisible by head count");

  model.layers_.resize(static_cast<std::size_t>(cfg.n_layers));
  for (int i = 0; i < cfg.n_layers; ++i) {
    const std::string base = "transformer.layer." + std::to_string(i) + ".";
    Layer& L = model.layers_[static_cast<std::size_t>(i)];
    // HF linears are stored (out, in); transpose once so forward is x * W + b.
    L.q_w = take_matrix(st, base + "attention.q_lin.weight", prefix).transpose();
    L.q_b = take_rowvec(st, base + "attention.q_lin.bias", prefix);
    L.k_w = take_matrix(st, base + "attention.k_lin.weight", prefix).transpose();
    L.k_b = take_rowvec(st, base + "attention.k_lin.bias", prefix);
    L.v_w = take_matrix(st, base + "attention.v_lin.weight", prefix).transpose();
    L.v_b = take_rowvec(st, base + "attention.v_lin.bias", prefix);
    L.o_w = take_matrix(st, base + "attention.out_lin.weight", prefix).transpose();
    L.o_b = take_rowvec(st, base + "attention.out_lin.bias", prefix);
    L.sa_g = take_rowvec(st, base + "sa_layer_norm.weight", prefix);
    L.sa_b = take_rowvec(st, base + "sa_layer_norm.bias", prefix);
    L.ffn1_w = take_matrix(st, base + "ffn.lin1.weight", prefix).transpose();
    L.ffn1_b = take_rowvec(st, base + "ffn.lin1.bias", prefix);
    L.ffn2_w = take_matrix(st, base + "ffn.lin2.weight", prefix).transpose();
    L.ffn2_b = take_rowvec(st, base + "ffn.lin2.bias", prefix);
    L.out_g = take_rowvec(st, base + "output_layer_norm.weight", prefix);
    L.out_b = take_rowvec(st, base + "output_layer_norm.bias", prefix);
    if (L.ffn1_w.cols() != cfg.hidden_dim) cfg.hidden_dim = static_cast<int>(L.ffn1_w.cols());
  }

  model.cfg_ = cfg;
  model.tok_ = WordPieceTokenizer::load(vocab.string());
  std::uint64_t h = fingerprint_file(weights.string());
  h = fnv1a64(model.tok_.fingerprint(), h);
  model.fingerprint_ = h;
  return model;
}

Eigen::MatrixXf DistilBert::hidden_states(const std::vector<int>& ids) const {
  if (ids.empty()) return Eigen::MatrixXf::Zero(0, cfg_.dim);
  if (static_cast<int>(ids.size()) > cfg_.max_position)
    throw ConfigError("sequence exceeds the checkpoint position limit");
  const Eigen::Index L = static_cast<Eigen::Index>(ids.size());
  const int dh = cfg_.dim / cfg_.n_heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

  Eigen::MatrixXf x(L, cfg_.dim);
  for (Eigen::Index i = 0; i < L; ++i) {
    const int id = ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= cfg_.vocab_size)
      throw EncoderUnavailableError("token id out of checkpoint vocab range");
    x.row(i) = word_emb_.row(id) + pos_emb_.row(i);
  }
  layer_norm_inplace(x, emb_g_, emb_b_);

  Eigen::MatrixXf q, k, v, ctx(L, cfg_.dim), scores;
  for (const Layer& layer : layers_) {
    q = (x * layer.q_w).rowwise() + layer.q_b;
    k = (x * layer.k_w).rowwise() + layer.k_b;
    v = (x * layer.v_w).rowwise() + layer.v_b;
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
      scores = q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose() * scale;
      softmax_rows_inplace(scores);
      ctx.middleCols(c0, dh) = scores * v.middleCols(c0, dh);
    }
    Eigen::MatrixXf sa = (ctx * layer.o_w).rowwise() + layer.o_b;
    x += sa;
    layer_norm_inplace(x, layer.sa_g, layer.sa_b);

    Eigen::MatrixXf f = (x * layer.ffn1_w).rowwise() + layer.ffn1_b;
    f = f.unaryExpr([](float t) { return 0.5f * t * (1.0f + std::erf(t * kInvSqrt2f)); });
    Eigen::MatrixXf f2 = (f * layer.ffn2_w).rowwise() + layer.ffn2_b;
    x += f2;
    layer_norm_inplace(x, layer.out_g, layer.out_b);
  }
  return x;
}

std::vector<int> DistilBert::encode_ids(const std::string& clean, int max_len) const {
  if (max_len < 2) throw ConfigError("max_len must allow the boundary tokens");
  if (max_len > cfg_.max_position)
    throw ConfigError("max_len exceeds the checkpoint position limit");
  std::vector<int> words = tok_.tokenize(clean);
  const std::size_t budget = static_cast<std::size_t>(max_len) - 2;
  if (words.size() > budget) words.resize(budget);
  std::vector<int> ids;
  ids.reserve(words.size() + 2);
  ids.push_back(tok_.cls_id());
  ids.insert(ids.end(), words.begin(), words.end());
  ids.push_back(tok_.sep_id());
  return ids;
}

std::vector<int> DistilBert::encode_pair_ids(const std::string& title,
                                             const std::string& body, int max_len) const {
  if (max_len < 3) throw ConfigError("max_len must allow the boundary tokens");
  if (max_len > cfg_.max_position)
    throw ConfigError("max_len exceeds the checkpoint position limit");
  std::vector<int> t = tok_.tokenize(title);
  std::vector<int> b = tok_.tokenize(body);
  const std::size_t budget = static_cast<std::size_t>(max_len) - 3;
  if (t.size() + b.size() > budget) {
    const std::size_t keep_b = t.size() >= budget ? 0 : budget - t.size();
    b.resize(keep_b);
    if (t.size() > budget) t.resize(budget);
  }
  std::vector<int> ids;
  ids.reserve(t.size() + b.size() + 3);
  ids.push_back(tok_.cls_id());
  ids.insert(ids.end(), t.begin(), t.end());
  ids.push_back(tok_.sep_id());
  ids.insert(ids.end(), b.begin(), b.end());
  ids.push_back(tok_.sep_id());
  return ids;
}

ContextualEncoding DistilBert::encode(const std::string& clean, int max_len) const {
  ContextualEncoding enc;
  enc.token_ids = encode_ids(clean, max_len);
  enc.attention_mask.assign(enc.token_ids.size(), 1);
  enc.vectors = hidden_states(enc.token_ids);
  return enc;
}

ContextualEncoding encode_contextual(const DistilBert& encoder, const std::string& clean,
                                     int max_len) {
  return encoder.encode(clean, max_len);
}

DistilBertFineTuner::DistilBertFineTuner(const DistilBert& base) : cfg_(base.config()) {
  auto mat = [](const Eigen::MatrixXf& m) { return m.cast<double>().eval(); };
  auto row = [](const Eigen::RowVectorXf& v) {
    return nn::Mat(v.cast<double>());
  };
  add("embeddings.word_embeddings.weight", mat(base.word_embeddings()));
  add("embeddings.position_embeddings.weight", mat(base.position_embeddings()));
  add("embeddings.LayerNorm.weight", row(base.embedding_ln_gamma()));
  add("embeddings.LayerNorm.bias", row(base.embedding_ln_beta()));
  for (int i = 0; i < cfg_.n_layers; ++i) {
    const DistilBert::Layer& L = base.layers()[static_cast<std::size_t>(i)];
    const std::string b = "transformer.layer." + std::to_string(i) + ".";
    add(b + "attention.q_lin.weight", mat(L.q_w));
    add(b + "attention.q_lin.bias", row(L.q_b));
    add(b + "attention.k_lin.weight", mat(L.k_w));
    add(b + "attention.k_lin.bias", row(L.k_b));
    add(b + "attention.v_lin.weight", mat(L.v_w));
    add(b + "attention.v_lin.bias", row(L.v_b));
    add(b + "attention.out_lin.weight", mat(L.o_w));
    add(b + "attention.out_lin.bias", row(L.o_b));
    add(b + "sa_layer_norm.weight", row(L.sa_g));
    add(b + "sa_layer_norm.bias", row(L.sa_b));
    add(b + "ffn.lin1.weight", mat(L.ffn1_w));
    add(b + "ffn.lin1.bias", row(L.ffn1_b));
    add(b + "ffn.lin2.weight", mat(L.ffn2_w));
    add(b + "ffn.lin2.bias", row(L.ffn2_b));
    add(b + "output_layer_norm.weight", row(L.out_g));
    add(b + "output_layer_norm.bias", row(L.out_b));
  }
}

nn::Parameter& DistilBertFineTuner::add(const std::string& name, nn::Mat value) {
  storage_.emplace_back(name, std::move(value));
  order_.push_back(&storage_.back());
  by_name_[name] = &storage_.back();
  return storage_.back();
}

nn::Parameter& DistilBertFineTuner::get(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw LoadError("fine-tuner missing parameter " + name);
  return *it->second;
}

nn::Node* DistilBertFineTuner::encode_sequence(nn::Graph& g,
                                               const std::vector<int>& ids,
                                               int pad_to_len) {
  if (ids.empty()) throw InferenceError("encode_sequence on empty ids");
  if (static_cast<int>(ids.size()) > cfg_.max_position ||
      static_cast<int>(ids.size()) > pad_to_len)
    throw InferenceError("sequence exceeds the encoder position limit");
  const int L = static_cast<int>(ids.size());
  const int dh = cfg_.dim / cfg_.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<int> positions(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) positions[static_cast<std::size_t>(i)] = i;

  nn::Node* words = g.gather_rows(g.param(get("embeddings.word_embeddings.weight")), ids);
  nn::Node* pos = g.gather_rows(g.param(get("embeddings.position_embeddings.weight")), positions);
  nn::Node* x = g.layer_norm_rows(g.add(words, pos),
                                  g.param(get("embeddings.LayerNorm.weight")),
                                  g.param(get("embeddings.LayerNorm.bias")),
                                  DistilBert::kLayerNormEps);

  for (int i = 0; i < cfg_.n_layers; ++i) {
    const std::string b = "transformer.layer." + std::to_string(i) + ".";
    nn::Node* q = g.add_rowvec(g.matmul(x, g.param(get(b + "attention.q_lin.weight"))),
                               g.param(get(b + "attention.q_lin.bias")));
    nn::Node* k = g.add_rowvec(g.matmul(x, g.param(get(b + "attention.k_lin.weight"))),
                               g.param(get(b + "attention.k_lin.bias")));
    nn::Node* v = g.add_rowvec(g.matmul(x, g.param(get(b + "attention.v_lin.weight"))),
                               g.param(get(b + "attention.v_lin.bias")));
    std::vector<nn::Node*> heads;
    heads.reserve(static_cast<std::size_t>(cfg_.n_heads));
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
      nn::Node* att = g.softmax_rows(
          g.scale(g.matmul_nt(g.slice_cols(q, c0, dh), g.slice_cols(k, c0, dh)), scale));
      heads.push_back(g.matmul(att, g.slice_cols(v, c0, dh)));
    }
    nn::Node* sa = g.add_rowvec(
        g.matmul(g.concat_cols(heads), g.param(get(b + "attention.out_lin.weight"))),
        g.param(get(b + "attention.out_lin.bias")));
    x = g.layer_norm_rows(g.add(x, sa), g.param(get(b + "sa_layer_norm.weight")),
                          g.param(get(b + "sa_layer_norm.bias")), DistilBert::kLayerNormEps);

    nn::Node* f = g.gelu(g.add_rowvec(g.matmul(x, g.param(get(b + "ffn.lin1.weight"))),
                                      g.param(get(b + "ffn.lin1.bias"))));
    nn::Node* f2 = g.add_rowvec(g.matmul(f, g.param(get(b + "ffn.lin2.weight"))),
                                g.param(get(b + "ffn.lin2.bias")));
    x = g.layer_norm_rows(g.add(x, f2), g.param(get(b + "output_layer_norm.weight")),
                          g.param(get(b + "output_layer_norm.bias")), DistilBert::kLayerNormEps);
  }

  if (L < pad_to_len)
    x = g.concat_rows({x, g.input(nn::Mat::Zero(pad_to_len - L, cfg_.dim))});
  return x;
}

std::vector<NamedTensor> DistilBertFineTuner::export_tensors() const {
  std::vector<NamedTensor> out;
  out.reserve(order_.size());
  for (const nn::Parameter* p : order_) {
    NamedTensor t;
    t.name = p->name;
    // Linear weights go back to the checkpoint's (out, in) layout; single-row
    // parameters (biases, layer-norm scales) are rank-1 tensors.
    nn::Mat value = p->value;
    if (value.rows() > 1 && p->name.find("lin") != std::string::npos)
      value = p->value.transpose();
    if (p->value.rows() == 1)
      t.shape = {value.cols()};
    else
      t.shape = {value.rows(), value.cols()};
    t.data.resize(static_cast<std::size_t>(value.size()));
    std::size_t idx = 0;
    for (Eigen::Index r = 0; r < value.rows(); ++r)
      for (Eigen::Index c = 0; c < value.cols(); ++c)
        t.data[idx++] = static_cast<float>(value(r, c));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace stancecred

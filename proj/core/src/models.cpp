#include "stancecred/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "stancecred/errors.hpp"

namespace stancecred {

namespace {

using nn::Graph;
using nn::Mat;
using nn::Node;

constexpr char kWeightsMagic[4] = {'S', 'C', 'W', 'T'};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::ANN: return "ann";
    case Architecture::LSTM: return "lstm";
    case Architecture::BILSTM: return "bilstm";
    case Architecture::CNN: return "cnn";
  }
  throw ConfigError("unknown architecture enum value");
}

Architecture architecture_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "ann") return Architecture::ANN;
  if (t == "lstm") return Architecture::LSTM;
  if (t == "bilstm" || t == "bi-lstm") return Architecture::BILSTM;
  if (t == "cnn") return Architecture::CNN;
  throw ConfigError("unknown architecture '" + s + "' (expected ann|lstm|bilstm|cnn)");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j{{"architecture", ::stancecred::to_string(architecture)},
                   {"recurrent_units", recurrent_units},
                   {"conv_kernel", conv_kernel},
                   {"conv_filters", conv_filters},
                   {"dense_units", dense_units},
                   {"use_attention", use_attention},
                   {"use_stance", use_stance},
                   {"dropout", dropout},
                   {"seed", seed}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  ModelConfig c;
  c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  c.recurrent_units = j.at("recurrent_units").get<int>();
  c.conv_kernel = j.at("conv_kernel").get<int>();
  c.conv_filters = j.at("conv_filters").get<int>();
  c.dense_units = j.at("dense_units").get<int>();
  c.use_attention = j.at("use_attention").get<bool>();
  c.use_stance = j.at("use_stance").get<bool>();
  c.dropout = j.at("dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string TrainHyperparams::to_json() const {
  nlohmann::json j{{"batch_size", batch_size},
                   {"max_epochs", max_epochs},
                   {"learning_rate", learning_rate},
                   {"early_stop_patience", early_stop_patience}};
  return j.dump();
}

TrainHyperparams TrainHyperparams::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  TrainHyperparams h;
  h.batch_size = j.at("batch_size").get<int>();
  h.max_epochs = j.at("max_epochs").get<int>();
  h.learning_rate = j.at("learning_rate").get<double>();
  h.early_stop_patience = j.at("early_stop_patience").get<int>();
  return h;
}

double sigmoid_scalar(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double binary_cross_entropy(int y, double p) {
  constexpr double kEps = 1e-7;
  p = std::min(std::max(p, kEps), 1.0 - kEps);
  return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
}

Label classify(double p, double threshold) {
  return p >= threshold ? Label::FAKE : Label::REAL;
}

Eigen::VectorXd attention_pool(const std::vector<Eigen::VectorXd>& states,
                               const Eigen::VectorXd& w,
                               std::vector<double>* weights_out) {
  if (states.empty()) throw DimensionError("attention_pool: empty state list");
  Eigen::VectorXd scores(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].size() != w.size())
      throw DimensionError("attention_pool: state/weight dimension mismatch");
    scores(static_cast<Eigen::Index>(i)) = states[i].dot(w);
  }
  Eigen::ArrayXd e = (scores.array() - scores.maxCoeff()).exp();
  Eigen::ArrayXd weights = e / e.sum();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    out += weights(static_cast<Eigen::Index>(i)) * states[i];
  if (weights_out) {
    weights_out->assign(weights.data(), weights.data() + weights.size());
  }
  return out;
}

Model::Model(ModelConfig cfg, InputSpec spec) : cfg_(cfg), spec_(spec) {
  if (spec_.seq_len <= 0 || spec_.emb_dim <= 0)
    throw ConfigError("input spec requires positive seq_len and emb_dim");
  if (cfg_.recurrent_units <= 0 || cfg_.conv_kernel <= 0 ||
      cfg_.conv_filters <= 0 || cfg_.dense_units <= 0)
    throw ConfigError("model sizes must be positive");
  if (cfg_.dropout < 0.0 || cfg_.dropout >= 1.0)
    throw ConfigError("dropout must lie in [0, 1)");
  if (cfg_.conv_kernel > spec_.seq_len)
    throw ConfigError("conv kernel exceeds sequence length");
  if (cfg_.use_stance && !spec_.stance)
    throw ConfigError("use_stance requires records that carry a stance value");
  if (cfg_.architecture == Architecture::CNN &&
      (spec_.seq_len - cfg_.conv_kernel + 1) < kPoolWindow)
    throw ConfigError("sequence too short for convolution plus pooling");

  Rng rng(cfg_.seed);
  const int e = spec_.emb_dim;
  const int u = cfg_.recurrent_units;

  if (spec_.vocab_rows > 0) {
    Mat emb(spec_.vocab_rows, e);
    for (Eigen::Index i = 0; i < emb.rows(); ++i)
      for (Eigen::Index j = 0; j < emb.cols(); ++j)
        emb(i, j) = (rng.next_double() * 2.0 - 1.0) * 0.05;
    add_param("embedding", std::move(emb));
  }

  int rep_dim = 0;
  switch (cfg_.architecture) {
    case Architecture::ANN:
      rep_dim = e;
      break;
    case Architecture::LSTM: {
      add_param("lstm.W", nn::glorot_uniform(e, 4 * u, rng));
      add_param("lstm.U", nn::orthogonal(u, 4 * u, rng));
      Mat b = Mat::Zero(1, 4 * u);
      b.middleCols(u, u).setOnes();  // forget gate bias
      add_param("lstm.b", std::move(b));
      rep_dim = u;
      break;
    }
    case Architecture::BILSTM: {
      for (const char* dir : {"fwd", "bwd"}) {
        add_param(std::string("lstm.") + dir + ".W", nn::glorot_uniform(e, 4 * u, rng));
        add_param(std::string("lstm.") + dir + ".U", nn::orthogonal(u, 4 * u, rng));
        Mat b = Mat::Zero(1, 4 * u);
        b.middleCols(u, u).setOnes();
        add_param(std::string("lstm.") + dir + ".b", std::move(b));
      }
      rep_dim = 2 * u;
      break;
    }
    case Architecture::CNN: {
      add_param("conv.kernel",
                nn::glorot_uniform(cfg_.conv_kernel * e, cfg_.conv_filters, rng));
      add_param("conv.bias", Mat::Zero(1, cfg_.conv_filters));
      const int pooled = (spec_.seq_len - cfg_.conv_kernel + 1) / kPoolWindow;
      rep_dim = cfg_.use_attention ? cfg_.conv_filters : pooled * cfg_.conv_filters;
      break;
    }
  }

  if (cfg_.use_attention) {
    int state_dim = 0;
    switch (cfg_.architecture) {
      case Architecture::ANN: state_dim = e; break;
      case Architecture::LSTM: state_dim = u; break;
      case Architecture::BILSTM: state_dim = 2 * u; break;
      case Architecture::CNN: state_dim = cfg_.conv_filters; break;
    }
    add_param("attention.w", nn::glorot_uniform(state_dim, 1, rng));
  }

  const int head_in = rep_dim + (cfg_.use_stance ? 1 : 0);
  add_param("head.W1", nn::glorot_uniform(head_in, cfg_.dense_units, rng));
  add_param("head.b1", Mat::Zero(1, cfg_.dense_units));
  add_param("head.W2", nn::glorot_uniform(cfg_.dense_units, 1, rng));
  add_param("head.b2", Mat::Zero(1, 1));
}

std::vector<nn::Parameter*> Model::parameters() const {
  std::vector<nn::Parameter*> all = order_;
  if (module_) {
    std::vector<nn::Parameter*> enc = module_->encoder_parameters();
    all.insert(all.end(), enc.begin(), enc.end());
  }
  return all;
}

nn::Parameter& Model::add_param(const std::string& name, Mat init) {
  storage_.emplace_back(name, std::move(init));
  order_.push_back(&storage_.back());
  by_name_[name] = &storage_.back();
  return storage_.back();
}

nn::Parameter& Model::param(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw LoadError("unknown parameter '" + name + "'");
  return *it->second;
}

const nn::Parameter& Model::param(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw LoadError("unknown parameter '" + name + "'");
  return *it->second;
}

void Model::check_record(const FeatureRecord& rec) const {
  if (module_) {
    if (rec.token_ids.empty() ||
        rec.token_ids.size() > static_cast<std::size_t>(spec_.seq_len))
      throw InferenceError("record token_ids length does not fit the encoder input");
  } else if (spec_.vocab_rows > 0) {
    if (rec.token_ids.size() != static_cast<std::size_t>(spec_.seq_len))
      throw InferenceError("record token_ids length does not match model input spec");
  } else {
    if (rec.sequence.rows() != spec_.seq_len || rec.sequence.cols() != spec_.emb_dim)
      throw InferenceError("record sequence shape does not match model input spec");
  }
}

Node* Model::sequence_node(Graph& g, Node* embedding, const FeatureRecord& rec) const {
  if (module_) return module_->encode_sequence(g, rec.token_ids, spec_.seq_len);
  if (spec_.vocab_rows > 0) return g.gather_rows(embedding, rec.token_ids);
  return g.input(rec.sequence.cast<double>());
}

nn::Node* Model::forward(Graph& g, const std::vector<const FeatureRecord*>& batch,
                         bool training, Rng* dropout_rng) {
  if (batch.empty()) throw InferenceError("forward on an empty batch");
  for (const FeatureRecord* rec : batch) check_record(*rec);
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  const int u = cfg_.recurrent_units;

  Node* embedding = (!module_ && spec_.vocab_rows > 0) ? g.param(param("embedding")) : nullptr;

  // Per-record sequence nodes, needed when the sequence itself is produced
  // inside the graph (fine-tuned encoder) and the architecture is recurrent.
  std::vector<Node*> module_seqs;
  if (module_ && (cfg_.architecture == Architecture::LSTM ||
                  cfg_.architecture == Architecture::BILSTM)) {
    module_seqs.reserve(batch.size());
    for (const FeatureRecord* rec : batch)
      module_seqs.push_back(sequence_node(g, embedding, *rec));
  }

  // Per-timestep batch rows for the recurrent architectures.
  auto step_input = [&](int t) -> Node* {
    if (!module_seqs.empty()) {
      std::vector<Node*> rows;
      rows.reserve(module_seqs.size());
      for (Node* seq : module_seqs) rows.push_back(g.slice_rows(seq, t, 1));
      return rows.size() == 1 ? rows.front() : g.concat_rows(rows);
    }
    if (spec_.vocab_rows > 0) {
      std::vector<int> ids(batch.size());
      for (std::size_t r = 0; r < batch.size(); ++r) ids[r] = batch[r]->token_ids[static_cast<std::size_t>(t)];
      return g.gather_rows(embedding, std::move(ids));
    }
    Mat x(b, spec_.emb_dim);
    for (Eigen::Index r = 0; r < b; ++r)
      x.row(r) = batch[static_cast<std::size_t>(r)]->sequence.row(t).cast<double>();
    return g.input(std::move(x));
  };

  auto lstm_pass = [&](const std::string& prefix, bool reverse) -> std::vector<Node*> {
    Node* w = g.param(param(prefix + ".W"));
    Node* uu = g.param(param(prefix + ".U"));
    Node* bias = g.param(param(prefix + ".b"));
    Node* h = g.input(Mat::Zero(b, u));
    Node* c = g.input(Mat::Zero(b, u));
    std::vector<Node*> states(static_cast<std::size_t>(spec_.seq_len));
    for (int step = 0; step < spec_.seq_len; ++step) {
      const int t = reverse ? spec_.seq_len - 1 - step : step;
      Node* x = step_input(t);
      Node* z = g.add_rowvec(g.add(g.matmul(x, w), g.matmul(h, uu)), bias);
      Node* i_gate = g.sigmoid(g.slice_cols(z, 0, u));
      Node* f_gate = g.sigmoid(g.slice_cols(z, u, u));
      Node* g_cand = g.tanh(g.slice_cols(z, 2 * u, u));
      Node* o_gate = g.sigmoid(g.slice_cols(z, 3 * u, u));
      c = g.add(g.cmul(f_gate, c), g.cmul(i_gate, g_cand));
      h = g.cmul(o_gate, g.tanh(c));
      states[static_cast<std::size_t>(t)] = h;
    }
    return states;
  };

  // Additive attention over per-position states: logits from a learned vector,
  // softmax across positions, weighted sum of the states.
  auto attend = [&](const std::vector<Node*>& states) -> Node* {
    Node* w = g.param(param("attention.w"));
    std::vector<Node*> scores;
    scores.reserve(states.size());
    for (Node* s : states) scores.push_back(g.matmul(s, w));
    Node* att = g.softmax_rows(g.concat_cols(scores));
    Node* ctx = nullptr;
    for (std::size_t t = 0; t < states.size(); ++t) {
      Node* term = g.mul_colvec(states[t], g.slice_cols(att, static_cast<Eigen::Index>(t), 1));
      ctx = ctx ? g.add(ctx, term) : term;
    }
    return ctx;
  };

  Node* rep = nullptr;
  switch (cfg_.architecture) {
    case Architecture::ANN: {
      if (!cfg_.use_attention && spec_.vocab_rows == 0 && !module_) {
        Mat pooled(b, spec_.emb_dim);
        for (Eigen::Index r = 0; r < b; ++r)
          pooled.row(r) = batch[static_cast<std::size_t>(r)]
                              ->sequence.cast<double>()
                              .colwise()
                              .mean();
        rep = g.input(std::move(pooled));
        break;
      }
      std::vector<Node*> rows;
      rows.reserve(batch.size());
      for (const FeatureRecord* rec : batch) {
        Node* seq = sequence_node(g, embedding, *rec);
        if (cfg_.use_attention) {
          Node* w = g.param(param("attention.w"));
          Node* att = g.softmax_rows(g.transpose(g.matmul(seq, w)));
          rows.push_back(g.matmul(att, seq));
        } else {
          rows.push_back(g.mean_rows(seq));
        }
      }
      rep = g.concat_rows(rows);
      break;
    }
    case Architecture::LSTM: {
      std::vector<Node*> states = lstm_pass("lstm", false);
      rep = cfg_.use_attention ? attend(states) : states.back();
      break;
    }
    case Architecture::BILSTM: {
      std::vector<Node*> fwd = lstm_pass("lstm.fwd", false);
      std::vector<Node*> bwd = lstm_pass("lstm.bwd", true);
      if (cfg_.use_attention) {
        std::vector<Node*> joined(fwd.size());
        for (std::size_t t = 0; t < fwd.size(); ++t)
          joined[t] = g.concat_cols({fwd[t], bwd[t]});
        rep = attend(joined);
      } else {
        rep = g.concat_cols({fwd.back(), bwd.front()});
      }
      break;
    }
    case Architecture::CNN: {
      Node* kernel = g.param(param("conv.kernel"));
      Node* bias = g.param(param("conv.bias"));
      std::vector<Node*> rows;
      rows.reserve(batch.size());
      for (const FeatureRecord* rec : batch) {
        Node* seq = sequence_node(g, embedding, *rec);
        Node* conv = g.relu(g.add_rowvec(g.conv1d_valid(seq, kernel, cfg_.conv_kernel), bias));
        Node* pooled = g.max_pool_rows(conv, kPoolWindow);
        if (cfg_.use_attention) {
          Node* w = g.param(param("attention.w"));
          Node* att = g.softmax_rows(g.transpose(g.matmul(pooled, w)));
          rows.push_back(g.matmul(att, pooled));
        } else {
          rows.push_back(g.flatten_row(pooled));
        }
      }
      rep = g.concat_rows(rows);
      break;
    }
  }

  if (cfg_.use_stance) {
    Mat stance(b, 1);
    for (Eigen::Index r = 0; r < b; ++r) stance(r, 0) = batch[static_cast<std::size_t>(r)]->stance;
    rep = g.concat_cols({rep, g.input(std::move(stance))});
  }

  Node* hidden = g.relu(g.add_rowvec(g.matmul(rep, g.param(param("head.W1"))),
                                     g.param(param("head.b1"))));
  if (training && cfg_.dropout > 0.0) {
    if (!dropout_rng) throw TrainingError("training forward pass requires a dropout rng");
    hidden = g.dropout(hidden, cfg_.dropout, *dropout_rng);
  }
  return g.add_rowvec(g.matmul(hidden, g.param(param("head.W2"))),
                      g.param(param("head.b2")));
}

std::vector<double> Model::predict_proba(const std::vector<FeatureRecord>& records,
                                         int batch_size) {
  if (batch_size <= 0) throw InferenceError("batch_size must be positive");
  std::vector<double> out;
  out.reserve(records.size());
  for (std::size_t start = 0; start < records.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(records.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const FeatureRecord*> batch;
    batch.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) batch.push_back(&records[i]);
    Graph g;
    Node* logits = forward(g, batch, /*training=*/false, nullptr);
    for (Eigen::Index r = 0; r < logits->rows(); ++r)
      out.push_back(sigmoid_scalar(logits->val()(r, 0)));
  }
  return out;
}

TrainingHistory train(Model& model, const std::vector<FeatureRecord>& train_set,
                      const std::vector<FeatureRecord>& val_set,
                      const TrainHyperparams& hp, std::ostream* log) {
  if (train_set.empty() || val_set.empty())
    throw TrainingError("train and validation sets must be non-empty");
  if (hp.batch_size <= 0 || hp.max_epochs <= 0 || hp.learning_rate <= 0.0 ||
      hp.early_stop_patience <= 0)
    throw TrainingError("hyperparameters must be positive");

  nn::AdamOptimizer opt(hp.learning_rate);
  const std::vector<nn::Parameter*> params = model.parameters();
  Rng rng(fnv1a64("train", model.config().seed));

  auto evaluate_set = [&](const std::vector<FeatureRecord>& set, double* loss_out,
                          double* acc_out) {
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < set.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t stop = std::min(set.size(), start + static_cast<std::size_t>(hp.batch_size));
      std::vector<const FeatureRecord*> batch;
      Eigen::VectorXd targets(static_cast<Eigen::Index>(stop - start));
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(&set[i]);
        targets(static_cast<Eigen::Index>(i - start)) = set[i].label;
      }
      Graph g;
      Node* logits = model.forward(g, batch, /*training=*/false, nullptr);
      Node* loss = g.sigmoid_bce_with_logits(logits, targets);
      loss_sum += loss->val()(0, 0) * static_cast<double>(batch.size());
      for (Eigen::Index r = 0; r < logits->rows(); ++r) {
        const int pred = logits->val()(r, 0) >= 0.0 ? 1 : 0;
        if (pred == batch[static_cast<std::size_t>(r)]->label) ++correct;
      }
    }
    *loss_out = loss_sum / static_cast<double>(set.size());
    *acc_out = static_cast<double>(correct) / static_cast<double>(set.size());
  };

  TrainingHistory history;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Mat> best_weights;
  int epochs_without_improvement = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
      std::vector<const FeatureRecord*> batch;
      Eigen::VectorXd targets(static_cast<Eigen::Index>(stop - start));
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(&train_set[order[i]]);
        targets(static_cast<Eigen::Index>(i - start)) = train_set[order[i]].label;
      }
      Graph g;
      Node* logits = model.forward(g, batch, /*training=*/true, &rng);
      Node* loss = g.sigmoid_bce_with_logits(logits, targets);
      const double batch_loss = loss->val()(0, 0);
      if (!std::isfinite(batch_loss))
        throw TrainingError("loss diverged (non-finite) at epoch " + std::to_string(epoch));
      loss_sum += batch_loss * static_cast<double>(batch.size());
      for (Eigen::Index r = 0; r < logits->rows(); ++r) {
        const int pred = logits->val()(r, 0) >= 0.0 ? 1 : 0;
        if (pred == batch[static_cast<std::size_t>(r)]->label) ++correct;
      }
      g.backward(loss);
      opt.step(params);
      opt.zero_grad(params);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    evaluate_set(val_set, &stats.val_loss, &stats.val_acc);
    if (!std::isfinite(stats.val_loss))
      throw TrainingError("validation loss diverged (non-finite) at epoch " + std::to_string(epoch));
    history.epochs.push_back(stats);
    if (log)
      *log << "epoch " << epoch << " train_loss " << stats.train_loss
           << " val_loss " << stats.val_loss << " train_acc " << stats.train_acc
           << " val_acc " << stats.val_acc << "\n";

    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      history.best_epoch = epoch;
      best_weights.clear();
      best_weights.reserve(params.size());
      for (const nn::Parameter* p : params) best_weights.push_back(p->value);
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= hp.early_stop_patience) break;
    }
  }

  if (!best_weights.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_weights[i];

  model.history = history;
  return history;
}

void save_model(const Model& model, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory " + dir.string());

  nlohmann::json meta;
  meta["model"] = nlohmann::json::parse(model.config().to_json());
  const InputSpec& spec = model.input_spec();
  meta["input_spec"] = {{"seq_len", spec.seq_len},
                        {"emb_dim", spec.emb_dim},
                        {"stance", spec.stance},
                        {"vocab_rows", spec.vocab_rows}};
  meta["encoder_fingerprint"] = model.encoder_fingerprint;
  meta["format"] = 1;
  write_file((dir / "config.json").string(), meta.dump(2) + "\n");

  std::ofstream out(dir / "weights.bin", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "weights.bin").string());
  out.write(kWeightsMagic, 4);
  const std::uint32_t version = 1;
  const std::uint32_t count = static_cast<std::uint32_t>(model.own_parameters().size());
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const nn::Parameter* p : model.own_parameters()) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(p->name.size());
    out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    const std::uint64_t rows = static_cast<std::uint64_t>(p->value.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(p->value.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
  if (!out) throw IoError("short write to " + (dir / "weights.bin").string());

  std::ostringstream hist;
  hist << "epoch,train_loss,val_loss,train_acc,val_acc\n";
  for (const EpochStats& s : model.history.epochs)
    hist << s.epoch << ',' << format_double(s.train_loss) << ','
         << format_double(s.val_loss) << ',' << format_double(s.train_acc) << ','
         << format_double(s.val_acc) << "\n";
  write_file((dir / "history.csv").string(), hist.str());
}

std::unique_ptr<Model> load_model(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file((dir / "config.json").string()));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed model config.json: " + std::string(e.what()));
  }
  ModelConfig cfg = ModelConfig::from_json(meta.at("model").dump());
  InputSpec spec;
  spec.seq_len = meta.at("input_spec").at("seq_len").get<int>();
  spec.emb_dim = meta.at("input_spec").at("emb_dim").get<int>();
  spec.stance = meta.at("input_spec").at("stance").get<bool>();
  spec.vocab_rows = meta.at("input_spec").at("vocab_rows").get<int>();

  auto model = std::make_unique<Model>(cfg, spec);
  model->encoder_fingerprint = meta.value("encoder_fingerprint", "");

  std::ifstream in(dir / "weights.bin", std::ios::binary);
  if (!in) throw LoadError("missing weights.bin in " + dir.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kWeightsMagic, 4) != 0)
    throw LoadError("bad weights magic in " + dir.string());
  std::uint32_t version = 0, count = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || version != 1) throw LoadError("unsupported weights version");
  if (count != model->own_parameters().size())
    throw LoadError("weights parameter count does not match the architecture");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in) throw LoadError("truncated weights.bin");
    nn::Parameter& p = model->param(name);
    if (static_cast<std::uint64_t>(p.value.rows()) != rows ||
        static_cast<std::uint64_t>(p.value.cols()) != cols)
      throw LoadError("shape mismatch for parameter '" + name + "'");
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(sizeof(double) * p.value.size()));
    if (!in) throw LoadError("truncated weights.bin");
  }

  std::ifstream hist(dir / "history.csv");
  if (hist) {
    std::string line;
    std::getline(hist, line);  // header
    while (std::getline(hist, line)) {
      if (line.empty()) continue;
      EpochStats s;
      if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &s.epoch, &s.train_loss,
                      &s.val_loss, &s.train_acc, &s.val_acc) == 5)
        model->history.epochs.push_back(s);
    }
  }
  return model;
}

std::string model_version(const Model& model) {
  std::uint64_t h = fnv1a64(model.config().to_json());
  h = fnv1a64(model.encoder_fingerprint, h);
  for (const nn::Parameter* p : model.own_parameters()) {
    h = fnv1a64(p->name, h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(p->value.data()),
                                 sizeof(double) * static_cast<std::size_t>(p->value.size())),
                h);
  }
  return to_hex(h);
}

}  // namespace stancecred

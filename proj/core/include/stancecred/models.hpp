#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stancecred/corpus.hpp"
#include "stancecred/nn/graph.hpp"
#include "stancecred/util.hpp"

namespace stancecred {

enum class Architecture { ANN, LSTM, BILSTM, CNN };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

struct ModelConfig {
  Architecture architecture = Architecture::CNN;
  int recurrent_units = 64;
  int conv_kernel = 5;
  int conv_filters = 64;
  int dense_units = 64;
  bool use_attention = false;
  bool use_stance = true;
  double dropout = 0.1;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& json_text);
};

struct TrainHyperparams {
  int batch_size = 32;
  int max_epochs = 20;
  double learning_rate = 1e-3;
  int early_stop_patience = 3;

  std::string to_json() const;
  static TrainHyperparams from_json(const std::string& json_text);
};

/// One training/inference example. Exactly one of `sequence` (pre-embedded,
/// seq_len x emb_dim) or `token_ids` (length seq_len, for the learned
/// embedding backend) is populated.
struct FeatureRecord {
  Eigen::MatrixXf sequence;
  std::vector<int> token_ids;
  double stance = 0.0;
  bool stance_degenerate = false;
  int label = 0;  // 1 = FAKE
};

struct InputSpec {
  int seq_len = 0;
  int emb_dim = 0;
  bool stance = true;
  int vocab_rows = 0;  // > 0: the model owns a trainable embedding table
};

/// Trainable feature extractor spliced into the model's graph: turns unpadded
/// subword ids into a seq_len x emb_dim node (zero rows appended as padding).
/// Used for encoder fine-tuning; frozen runs pre-embed instead.
class SequenceEncoderModule {
 public:
  virtual ~SequenceEncoderModule() = default;
  virtual nn::Node* encode_sequence(nn::Graph& g, const std::vector<int>& token_ids,
                                    int pad_to_len) = 0;
  virtual std::vector<nn::Parameter*> encoder_parameters() = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainingHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // 1-based epoch with minimal val loss
};

class Model {
 public:
  Model(ModelConfig cfg, InputSpec spec);

  const ModelConfig& config() const { return cfg_; }
  const InputSpec& input_spec() const { return spec_; }

  /// Everything the optimizer updates: own weights plus, when fine-tuning,
  /// the attached encoder module's parameters.
  std::vector<nn::Parameter*> parameters() const;
  /// Only the weights serialized with the model artifact.
  const std::vector<nn::Parameter*>& own_parameters() const { return order_; }
  nn::Parameter& param(const std::string& name);
  const nn::Parameter& param(const std::string& name) const;

  /// Attach a trainable encoder (fine-tune mode). Records must then carry
  /// unpadded subword ids in token_ids. The module must outlive the model.
  void set_encoder_module(SequenceEncoderModule* module) { module_ = module; }
  SequenceEncoderModule* encoder_module() const { return module_; }

  /// Batch logits, shape batch x 1. Dropout is applied only when `training`.
  nn::Node* forward(nn::Graph& g, const std::vector<const FeatureRecord*>& batch,
                    bool training, Rng* dropout_rng);

  std::vector<double> predict_proba(const std::vector<FeatureRecord>& records,
                                    int batch_size = 128);

  std::string encoder_fingerprint;
  TrainingHistory history;

  static constexpr int kPoolWindow = 4;

 private:
  nn::Parameter& add_param(const std::string& name, nn::Mat init);
  void check_record(const FeatureRecord& rec) const;
  nn::Node* sequence_node(nn::Graph& g, nn::Node* embedding,
                          const FeatureRecord& rec) const;

  ModelConfig cfg_;
  InputSpec spec_;
  std::deque<nn::Parameter> storage_;
  std::vector<nn::Parameter*> order_;
  std::map<std::string, nn::Parameter*> by_name_;
  SequenceEncoderModule* module_ = nullptr;
};

double binary_cross_entropy(int y, double p);
Label classify(double p, double threshold = 0.5);

/// Additive attention over a non-empty state list: softmax(states · w) gives
/// position weights; returns the weighted sum. Weights optionally exposed.
Eigen::VectorXd attention_pool(const std::vector<Eigen::VectorXd>& states,
                               const Eigen::VectorXd& w,
                               std::vector<double>* weights_out = nullptr);

TrainingHistory train(Model& model, const std::vector<FeatureRecord>& train_set,
                      const std::vector<FeatureRecord>& val_set,
                      const TrainHyperparams& hp, std::ostream* log = nullptr);

void save_model(const Model& model, const std::filesystem::path& dir);
std::unique_ptr<Model> load_model(const std::filesystem::path& dir);

/// Stable content hash over the config and every weight byte.
std::string model_version(const Model& model);

double sigmoid_scalar(double z);

}  // namespace stancecred

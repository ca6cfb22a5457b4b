#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stancecred/encode.hpp"
#include "stancecred/models.hpp"
#include "stancecred/nn/graph.hpp"
#include "stancecred/safetensors.hpp"
#include "stancecred/wordpiece.hpp"

namespace stancecred {

struct DistilBertConfig {
  int dim = 768;
  int n_layers = 6;
  int n_heads = 12;
  int hidden_dim = 3072;
  int max_position = 512;
  int vocab_size = 0;
};

/// Distilled 6-layer bidirectional transformer encoder loaded from a local
/// checkpoint directory (config.json + model.safetensors + vocab.txt).
/// Inference runs in float32 with no graph; fine-tuning goes through
/// DistilBertFineTuner below.
class DistilBert {
 public:
  static DistilBert load(const std::string& checkpoint_dir);

  const DistilBertConfig& config() const { return cfg_; }
  const WordPieceTokenizer& tokenizer() const { return tok_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  /// Final-layer hidden states for an unpadded id sequence.
  Eigen::MatrixXf hidden_states(const std::vector<int>& ids) const;

  /// [CLS] subwords [SEP], truncated (keeping the head) to max_len total ids.
  std::vector<int> encode_ids(const std::string& clean, int max_len) const;

  /// [CLS] title [SEP] body [SEP]; the body tail is truncated first, then the
  /// title, so the sequence head survives.
  std::vector<int> encode_pair_ids(const std::string& title, const std::string& body,
                                   int max_len) const;

  /// Unpadded encoding: ids, an all-ones mask, final hidden states.
  ContextualEncoding encode(const std::string& clean, int max_len = 512) const;

  struct Layer {
    Eigen::MatrixXf q_w, k_w, v_w, o_w;    // stored input x output
    Eigen::RowVectorXf q_b, k_b, v_b, o_b;
    Eigen::RowVectorXf sa_g, sa_b;
    Eigen::MatrixXf ffn1_w, ffn2_w;
    Eigen::RowVectorXf ffn1_b, ffn2_b;
    Eigen::RowVectorXf out_g, out_b;
  };

  const Eigen::MatrixXf& word_embeddings() const { return word_emb_; }
  const Eigen::MatrixXf& position_embeddings() const { return pos_emb_; }
  const Eigen::RowVectorXf& embedding_ln_gamma() const { return emb_g_; }
  const Eigen::RowVectorXf& embedding_ln_beta() const { return emb_b_; }
  const std::vector<Layer>& layers() const { return layers_; }

  static constexpr double kLayerNormEps = 1e-12;

 private:
  DistilBert() = default;

  DistilBertConfig cfg_;
  WordPieceTokenizer tok_;
  Eigen::MatrixXf word_emb_, pos_emb_;
  Eigen::RowVectorXf emb_g_, emb_b_;
  std::vector<Layer> layers_;
  std::uint64_t fingerprint_ = 0;
};

ContextualEncoding encode_contextual(const DistilBert& encoder, const std::string& clean,
                                     int max_len = 512);

/// TextEncoder backend over the transformer, used by the stance computation.
class ContextualTextEncoder : public TextEncoder {
 public:
  ContextualTextEncoder(const DistilBert& model, int max_len)
      : model_(model), max_len_(max_len) {}

  std::string name() const override { return "contextual"; }
  int dim() const override { return model_.config().dim; }
  std::uint64_t fingerprint() const override { return model_.fingerprint(); }
  Eigen::MatrixXf encode_tokens(const std::string& clean) const override {
    return model_.hidden_states(model_.encode_ids(clean, max_len_));
  }

 private:
  const DistilBert& model_;
  int max_len_;
};

/// Double-precision tape mirror of a DistilBert checkpoint. Splices the
/// transformer into a classifier's graph so gradients reach the encoder
/// weights. Memory and compute costs are substantial; intended for small
/// sequence lengths or opt-in full runs.
class DistilBertFineTuner : public SequenceEncoderModule {
 public:
  explicit DistilBertFineTuner(const DistilBert& base);

  nn::Node* encode_sequence(nn::Graph& g, const std::vector<int>& token_ids,
                            int pad_to_len) override;
  std::vector<nn::Parameter*> encoder_parameters() override { return order_; }

  const DistilBertConfig& config() const { return cfg_; }

  /// Current weights in checkpoint layout (F32, HF tensor names), for
  /// persisting a fine-tuned encoder with SafeTensors::write.
  std::vector<NamedTensor> export_tensors() const;

 private:
  nn::Parameter& add(const std::string& name, nn::Mat value);
  nn::Parameter& get(const std::string& name);

  DistilBertConfig cfg_;
  std::deque<nn::Parameter> storage_;
  std::vector<nn::Parameter*> order_;
  std::map<std::string, nn::Parameter*> by_name_;
};

}  // namespace stancecred

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stancecred/config.hpp"
#include "stancecred/corpus.hpp"
#include "stancecred/distilbert.hpp"
#include "stancecred/encode.hpp"
#include "stancecred/models.hpp"
#include "stancecred/stance.hpp"

namespace stancecred {

/// Version tag for the cleaning rules; bumping it invalidates feature caches.
inline constexpr int kCleaningVersion = 1;

/// A loaded encoding backend plus the matching stance encoder.
struct EncoderBundle {
  std::string backend;  // tokenizer | static | contextual
  int max_len = 512;
  int emb_dim = 0;
  int vocab_rows = 0;  // tokenizer backend: learned embedding rows (vocab + separator)

  std::unique_ptr<Vocabulary> vocab;
  std::unique_ptr<StaticEmbeddingTable> table;
  std::shared_ptr<DistilBert> bert;
  std::unique_ptr<TextEncoder> stance_encoder;

  std::string fingerprint;

  InputSpec input_spec(bool fine_tune) const;
};

/// Builds the configured backend. The tokenizer backend derives its
/// vocabulary from the training articles only.
EncoderBundle build_encoder(const ExperimentConfig& cfg,
                            const std::vector<Article>& train_articles);

/// One cleaned article -> FeatureRecord: fused title/separator/body sequence,
/// stance scalar, label. With fine_tune the record carries unpadded subword
/// ids instead of a pre-embedded sequence.
FeatureRecord featurize_article(const Article& cleaned, const EncoderBundle& bundle,
                                bool fine_tune = false);

/// Featurizes a list of cleaned articles. Contextual features are cached on
/// disk (keyed by encoder fingerprint, max_len, cleaning version and the
/// article content) under cache_dir when it is non-empty.
std::vector<FeatureRecord> featurize_articles(const std::vector<Article>& cleaned,
                                              const EncoderBundle& bundle,
                                              const std::string& cache_dir,
                                              bool fine_tune = false,
                                              std::ostream* log = nullptr);

/// Deterministic stratified subsample of `n` articles (0 = keep everything).
std::vector<Article> stratified_subsample(const std::vector<Article>& articles,
                                          std::size_t n, std::uint64_t seed);

std::vector<Article> select_articles(const std::vector<Article>& all,
                                     const std::vector<std::string>& ids);

}  // namespace stancecred

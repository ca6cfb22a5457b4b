#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace stancecred {

/// Word-to-index map with two reserved slots. Built from training-split
/// text only; tokens are ordered by descending frequency, ties broken
/// lexicographically.
class Vocabulary {
 public:
  static constexpr int kPadIndex = 0;
  static constexpr int kOovIndex = 1;
  static constexpr int kReserved = 2;

  Vocabulary() = default;

  /// Index for a token; unknown tokens map to kOovIndex.
  int lookup(const std::string& token) const {
    auto it = index_of_.find(token);
    return it == index_of_.end() ? kOovIndex : it->second;
  }

  /// Total size including the two reserved indices.
  int size() const { return static_cast<int>(tokens_.size()) + kReserved; }

  /// Token at a non-reserved index (kReserved <= index < size()).
  const std::string& token_at(int index) const { return tokens_.at(static_cast<std::size_t>(index - kReserved)); }

  void add_token(const std::string& token);

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  std::uint64_t fingerprint() const;

 private:
  std::unordered_map<std::string, int> index_of_;
  std::vector<std::string> tokens_;
};

/// Frequency-then-lexicographic vocabulary over whitespace tokens.
/// Throws EmptyCorpusError on an empty corpus. `max_size` caps the number of
/// non-reserved tokens.
Vocabulary build_vocab(const std::vector<std::string>& train_texts,
                       std::size_t max_size = std::numeric_limits<std::size_t>::max());

/// Splits on spaces, maps through the vocabulary (unknown -> OOV), truncates
/// head-first to max_len and post-pads with the padding index.
std::vector<int> tokenize_words(const std::string& clean, const Vocabulary& vocab,
                                std::size_t max_len);

/// token -> vector table in the published text format: one token followed by
/// whitespace-separated floats per line. Unknown lookups yield zero vectors.
class StaticEmbeddingTable {
 public:
  static StaticEmbeddingTable load(const std::string& path);
  static StaticEmbeddingTable from_rows(
      const std::vector<std::pair<std::string, std::vector<float>>>& rows);

  int dim() const { return dim_; }
  std::size_t size() const { return static_cast<std::size_t>(vectors_.rows()); }

  /// Row for a token, or a zero vector when the token is unknown.
  Eigen::RowVectorXf lookup(const std::string& token) const;
  bool contains(const std::string& token) const { return index_of_.count(token) > 0; }

  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  std::unordered_map<std::string, int> index_of_;
  Eigen::MatrixXf vectors_;
  int dim_ = 0;
  std::uint64_t fingerprint_ = 0;
};

/// One row per position up to max_len; padding positions and unknown tokens
/// are zero rows.
Eigen::MatrixXf embed_static(const std::vector<std::string>& tokens,
                             const StaticEmbeddingTable& table, std::size_t max_len);

/// Subword encoding of one text: ids, {0,1} mask, and per-token vectors.
struct ContextualEncoding {
  std::vector<int> token_ids;
  std::vector<int> attention_mask;
  Eigen::MatrixXf vectors;  // token_ids.size() x hidden dim
};

/// Arithmetic mean of the rows where mask is 1, accumulated in double.
/// Throws PoolingError when every position is masked out.
struct PooledVector {
  Eigen::VectorXd values;
  std::size_t source_token_count = 0;
};

PooledVector pool(const Eigen::MatrixXf& vectors, const std::vector<int>& mask);

/// Uniform interface the stance computation uses: a backend turns one cleaned
/// text into per-token vectors (no padding rows). Implementations are
/// immutable after construction; concurrent encoding is safe.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual std::uint64_t fingerprint() const = 0;
  /// Per-token vectors for a cleaned text; zero rows for an empty text.
  virtual Eigen::MatrixXf encode_tokens(const std::string& clean) const = 0;
};

/// Backend over a word Vocabulary. The per-index vectors are a fixed seeded
/// random table standing in for a learned embedding layer's initialization,
/// which keeps the stance feature deterministic and model-independent.
class WordIndexEncoder : public TextEncoder {
 public:
  explicit WordIndexEncoder(Vocabulary vocab, int dim = 100);

  std::string name() const override { return "tokenizer"; }
  int dim() const override { return dim_; }
  std::uint64_t fingerprint() const override;
  Eigen::MatrixXf encode_tokens(const std::string& clean) const override;

  const Vocabulary& vocab() const { return vocab_; }

 private:
  Vocabulary vocab_;
  int dim_;
  Eigen::MatrixXf table_;  // vocab.size() x dim
};

class StaticVectorEncoder : public TextEncoder {
 public:
  explicit StaticVectorEncoder(StaticEmbeddingTable table) : table_(std::move(table)) {}

  std::string name() const override { return "static"; }
  int dim() const override { return table_.dim(); }
  std::uint64_t fingerprint() const override { return table_.fingerprint(); }
  Eigen::MatrixXf encode_tokens(const std::string& clean) const override;

  const StaticEmbeddingTable& table() const { return table_; }

 private:
  StaticEmbeddingTable table_;
};

}  // namespace stancecred

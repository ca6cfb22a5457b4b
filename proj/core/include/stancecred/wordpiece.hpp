#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace stancecred {

/// Greedy longest-match subword tokenizer driven by a checkpoint's vocab.txt
/// (one token per line, index = line number). Inputs are expected to be
/// already cleaned (lowercase, alphanumeric words), so no basic-tokenizer
/// punctuation handling is needed beyond whitespace splitting.
class WordPieceTokenizer {
 public:
  WordPieceTokenizer() = default;  // empty; populate via load/from_tokens

  static WordPieceTokenizer load(const std::string& vocab_path);
  static WordPieceTokenizer from_tokens(const std::vector<std::string>& tokens);

  std::vector<int> tokenize(const std::string& clean) const;

  int token_id(const std::string& token) const;  // -1 when absent
  const std::string& token_at(int id) const;
  std::size_t size() const { return tokens_.size(); }

  int pad_id() const { return pad_id_; }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }

  std::string fingerprint() const { return fingerprint_; }

  static constexpr std::size_t kMaxWordChars = 100;

 private:
  void index_specials();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  int pad_id_ = -1, unk_id_ = -1, cls_id_ = -1, sep_id_ = -1;
  std::string fingerprint_;
};

}  // namespace stancecred

#include "stancecred/wordpiece.hpp"

#include <fstream>
#include <sstream>

#include "stancecred/errors.hpp"
#include "stancecred/util.hpp"

namespace stancecred {

WordPieceTokenizer WordPieceTokenizer::load(const std::string& vocab_path) {
  std::ifstream in(vocab_path);
  if (!in) throw LoadError("cannot open vocab file " + vocab_path);
  WordPieceTokenizer t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.ids_.emplace(line, static_cast<int>(t.tokens_.size()));
    t.tokens_.push_back(line);
  }
  if (t.tokens_.empty()) throw LoadError("empty vocab file " + vocab_path);
  t.index_specials();
  t.fingerprint_ = to_hex(fingerprint_file(vocab_path));
  return t;
}

WordPieceTokenizer WordPieceTokenizer::from_tokens(const std::vector<std::string>& tokens) {
  WordPieceTokenizer t;
  for (const std::string& tok : tokens) {
    t.ids_.emplace(tok, static_cast<int>(t.tokens_.size()));
    t.tokens_.push_back(tok);
  }
  if (t.tokens_.empty()) throw LoadError("empty token list");
  t.index_specials();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const std::string& tok : t.tokens_) h = fnv1a64(tok + "\n", h);
  t.fingerprint_ = to_hex(h);
  return t;
}

void WordPieceTokenizer::index_specials() {
  pad_id_ = token_id("[PAD]");
  unk_id_ = token_id("[UNK]");
  cls_id_ = token_id("[CLS]");
  sep_id_ = token_id("[SEP]");
  if (pad_id_ < 0 || unk_id_ < 0 || cls_id_ < 0 || sep_id_ < 0)
    throw LoadError("vocab is missing one of [PAD] [UNK] [CLS] [SEP]");
}

int WordPieceTokenizer::token_id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? -1 : it->second;
}

const std::string& WordPieceTokenizer::token_at(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw LoadError("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> WordPieceTokenizer::tokenize(const std::string& clean) const {
  std::vector<int> out;
  for (const std::string& word : split_whitespace(clean)) {
    if (word.size() > kMaxWordChars) {
      out.push_back(unk_id_);
      continue;
    }
    std::vector<int> pieces;
    std::size_t start = 0;
    bool bad = false;
    while (start < word.size()) {
      std::size_t end = word.size();
      int found = -1;
      while (end > start) {
        std::string sub = word.substr(start, end - start);
        if (start > 0) sub = "##" + sub;
        auto it = ids_.find(sub);
        if (it != ids_.end()) {
          found = it->second;
          break;
        }
        --end;
      }
      if (found < 0) {
        bad = true;
        break;
      }
      pieces.push_back(found);
      start = end;
    }
    if (bad)
      out.push_back(unk_id_);
    else
      out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

}  // namespace stancecred

#include "stancecred/encode.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "stancecred/errors.hpp"
#include "stancecred/util.hpp"

namespace stancecred {

void Vocabulary::add_token(const std::string& token) {
  if (index_of_.count(token)) return;
  index_of_[token] = static_cast<int>(tokens_.size()) + kReserved;
  tokens_.push_back(token);
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary: " + path);
  for (const auto& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary: " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) v.add_token(line);
  }
  return v;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

Vocabulary build_vocab(const std::vector<std::string>& train_texts, std::size_t max_size) {
  if (train_texts.empty()) throw EmptyCorpusError("build_vocab: empty training corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& text : train_texts)
    for (auto& tok : split_whitespace(text)) freq[tok] += 1;
  if (freq.empty()) throw EmptyCorpusError("build_vocab: no tokens in training corpus");

  std::vector<std::pair<std::string, std::size_t>> ordered(freq.begin(), freq.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, count] : ordered) {
    if (static_cast<std::size_t>(v.size()) - Vocabulary::kReserved >= max_size) break;
    v.add_token(tok);
  }
  return v;
}

std::vector<int> tokenize_words(const std::string& clean, const Vocabulary& vocab,
                                std::size_t max_len) {
  std::vector<int> ids(max_len, Vocabulary::kPadIndex);
  auto tokens = split_whitespace(clean);
  std::size_t n = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.lookup(tokens[i]);
  return ids;
}

StaticEmbeddingTable StaticEmbeddingTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vector file: " + path);

  std::vector<std::pair<std::string, std::vector<float>>> rows;
  std::string line;
  std::size_t line_no = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<float> values;
    float x;
    while (ss >> x) values.push_back(x);
    if (values.empty())
      throw LoadError("vector file line " + std::to_string(line_no) + ": no values");
    if (dim < 0) dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != dim)
      throw LoadError("vector file line " + std::to_string(line_no) + ": dimension " +
                      std::to_string(values.size()) + " != " + std::to_string(dim));
    rows.emplace_back(std::move(token), std::move(values));
  }
  if (rows.empty()) throw LoadError("vector file is empty: " + path);
  auto table = from_rows(rows);
  table.fingerprint_ = fingerprint_file(path);
  return table;
}

StaticEmbeddingTable StaticEmbeddingTable::from_rows(
    const std::vector<std::pair<std::string, std::vector<float>>>& rows) {
  StaticEmbeddingTable t;
  if (rows.empty()) throw LoadError("vector table: no rows");
  t.dim_ = static_cast<int>(rows.front().second.size());
  t.vectors_.resize(static_cast<Eigen::Index>(rows.size()), t.dim_);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [token, values] = rows[i];
    if (static_cast<int>(values.size()) != t.dim_)
      throw LoadError("vector table: inconsistent dimension for token \"" + token + "\"");
    if (t.index_of_.count(token)) continue;  // first occurrence wins
    t.index_of_[token] = static_cast<int>(i);
    for (int d = 0; d < t.dim_; ++d) t.vectors_(static_cast<Eigen::Index>(i), d) = values[static_cast<std::size_t>(d)];
    h = fnv1a64(token, h);
  }
  t.fingerprint_ = h;
  return t;
}

Eigen::RowVectorXf StaticEmbeddingTable::lookup(const std::string& token) const {
  auto it = index_of_.find(token);
  if (it == index_of_.end()) return Eigen::RowVectorXf::Zero(dim_);
  return vectors_.row(it->second);
}

Eigen::MatrixXf embed_static(const std::vector<std::string>& tokens,
                             const StaticEmbeddingTable& table, std::size_t max_len) {
  Eigen::MatrixXf out = Eigen::MatrixXf::Zero(static_cast<Eigen::Index>(max_len), table.dim());
  std::size_t n = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = table.lookup(tokens[i]);
  return out;
}

PooledVector pool(const Eigen::MatrixXf& vectors, const std::vector<int>& mask) {
  if (static_cast<std::size_t>(vectors.rows()) != mask.size())
    throw DimensionError("pool: mask length " + std::to_string(mask.size()) +
                         " != rows " + std::to_string(vectors.rows()));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(vectors.cols());
  std::size_t count = 0;
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    if (mask[static_cast<std::size_t>(r)] == 0) continue;
    sum += vectors.row(r).cast<double>().transpose();
    ++count;
  }
  if (count == 0) throw PoolingError("pool: every position is masked");
  PooledVector out;
  out.values = sum / static_cast<double>(count);
  out.source_token_count = count;
  return out;
}

WordIndexEncoder::WordIndexEncoder(Vocabulary vocab, int dim)
    : vocab_(std::move(vocab)), dim_(dim) {
  // Fixed internal seed: the table plays the role of an embedding layer's
  // random initialization but stays identical across runs and models.
  Rng rng(0x57a9cec0ffee);
  table_.resize(vocab_.size(), dim_);
  table_.row(Vocabulary::kPadIndex).setZero();
  for (int i = 1; i < vocab_.size(); ++i)
    for (int d = 0; d < dim_; ++d)
      table_(i, d) = static_cast<float>(rng.next_double() * 2.0 - 1.0);
}

std::uint64_t WordIndexEncoder::fingerprint() const {
  return fnv1a64("word-index:" + std::to_string(dim_), vocab_.fingerprint());
}

Eigen::MatrixXf WordIndexEncoder::encode_tokens(const std::string& clean) const {
  auto tokens = split_whitespace(clean);
  Eigen::MatrixXf out(static_cast<Eigen::Index>(tokens.size()), dim_);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = table_.row(vocab_.lookup(tokens[i]));
  return out;
}

Eigen::MatrixXf StaticVectorEncoder::encode_tokens(const std::string& clean) const {
  auto tokens = split_whitespace(clean);
  Eigen::MatrixXf out(static_cast<Eigen::Index>(tokens.size()), table_.dim());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = table_.lookup(tokens[i]);
  return out;
}

}  // namespace stancecred

#include "stancecred/pipeline.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "stancecred/errors.hpp"
#include "stancecred/util.hpp"

namespace stancecred {

namespace {

namespace fs = std::filesystem;

constexpr char kCacheMagic[4] = {'S', 'C', 'F', 'C'};

std::uint64_t article_cache_key(const Article& a) {
  std::uint64_t h = fnv1a64(a.id);
  h = fnv1a64(a.title, h);
  h = fnv1a64(a.text, h);
  return h;
}

bool read_cached(const fs::path& file, int max_len, int dim, FeatureRecord* rec) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return false;
  char magic[4];
  std::uint32_t version = 0, rows = 0, cols = 0;
  double stance = 0.0;
  std::uint8_t degenerate = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&stance), sizeof(stance));
  in.read(reinterpret_cast<char*>(&degenerate), sizeof(degenerate));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || std::memcmp(magic, kCacheMagic, 4) != 0 || version != 1) return false;
  if (cols != static_cast<std::uint32_t>(dim) || rows > static_cast<std::uint32_t>(max_len))
    return false;
  Eigen::MatrixXf seq = Eigen::MatrixXf::Zero(max_len, dim);
  std::vector<float> row(cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(cols * 4));
    for (std::uint32_t c = 0; c < cols; ++c) seq(r, c) = row[c];
  }
  if (!in) return false;
  rec->sequence = std::move(seq);
  rec->stance = stance;
  rec->stance_degenerate = degenerate != 0;
  return true;
}

void write_cached(const fs::path& file, const FeatureRecord& rec, int real_rows) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) return;  // cache is best-effort
  out.write(kCacheMagic, 4);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&rec.stance), sizeof(rec.stance));
  const std::uint8_t degenerate = rec.stance_degenerate ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&degenerate), sizeof(degenerate));
  const std::uint32_t rows = static_cast<std::uint32_t>(real_rows);
  const std::uint32_t cols = static_cast<std::uint32_t>(rec.sequence.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  std::vector<float> row(cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) row[c] = rec.sequence(r, c);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(cols * 4));
  }
}

}  // namespace

InputSpec EncoderBundle::input_spec(bool /*fine_tune*/) const {
  InputSpec spec;
  spec.seq_len = max_len;
  spec.emb_dim = emb_dim;
  spec.stance = true;
  spec.vocab_rows = vocab_rows;
  return spec;
}

EncoderBundle build_encoder(const ExperimentConfig& cfg,
                            const std::vector<Article>& train_articles) {
  EncoderBundle b;
  b.backend = cfg.backend;
  b.max_len = cfg.max_len;
  if (cfg.backend == "tokenizer") {
    std::vector<std::string> texts;
    texts.reserve(train_articles.size());
    for (const Article& a : train_articles) texts.push_back(a.title + " " + a.text);
    b.vocab = std::make_unique<Vocabulary>(build_vocab(texts, cfg.vocab_size));
    b.emb_dim = cfg.embedding_dim;
    b.vocab_rows = b.vocab->size() + 1;  // one extra row for the separator token
    b.stance_encoder = std::make_unique<WordIndexEncoder>(*b.vocab, cfg.embedding_dim);
    b.fingerprint = to_hex(fnv1a64(std::to_string(cfg.embedding_dim),
                                   b.vocab->fingerprint()));
  } else if (cfg.backend == "static") {
    b.table = std::make_unique<StaticEmbeddingTable>(StaticEmbeddingTable::load(cfg.vectors_path));
    b.emb_dim = b.table->dim();
    b.stance_encoder = std::make_unique<StaticVectorEncoder>(*b.table);
    b.fingerprint = to_hex(b.table->fingerprint());
  } else if (cfg.backend == "contextual") {
    b.bert = std::make_shared<DistilBert>(DistilBert::load(cfg.checkpoint_dir));
    if (cfg.max_len > b.bert->config().max_position)
      throw ConfigError("encoder.max_len exceeds the checkpoint position limit");
    b.emb_dim = b.bert->config().dim;
    b.stance_encoder = std::make_unique<ContextualTextEncoder>(*b.bert, cfg.max_len);
    b.fingerprint = to_hex(b.bert->fingerprint());
  } else {
    throw ConfigError("unknown encoder backend '" + cfg.backend + "'");
  }
  return b;
}

FeatureRecord featurize_article(const Article& a, const EncoderBundle& bundle,
                                bool fine_tune) {
  FeatureRecord rec;
  rec.label = a.label == Label::FAKE ? 1 : 0;

  const StanceScore stance = compute_stance(a.title, a.text, *bundle.stance_encoder);
  rec.stance = stance.value;
  rec.stance_degenerate = stance.degenerate;

  const std::size_t max_len = static_cast<std::size_t>(bundle.max_len);
  if (bundle.backend == "tokenizer") {
    const int sep_id = bundle.vocab->size();
    std::vector<int> ids;
    for (const std::string& w : split_whitespace(a.title)) ids.push_back(bundle.vocab->lookup(w));
    ids.push_back(sep_id);
    for (const std::string& w : split_whitespace(a.text)) ids.push_back(bundle.vocab->lookup(w));
    if (ids.size() > max_len) ids.resize(max_len);
    ids.resize(max_len, Vocabulary::kPadIndex);
    rec.token_ids = std::move(ids);
  } else if (bundle.backend == "static") {
    Eigen::MatrixXf seq = Eigen::MatrixXf::Zero(bundle.max_len, bundle.emb_dim);
    std::size_t row = 0;
    auto put = [&](const std::string& w) {
      if (row >= max_len) return;
      seq.row(static_cast<Eigen::Index>(row)) = bundle.table->lookup(w);
      ++row;
    };
    for (const std::string& w : split_whitespace(a.title)) put(w);
    if (row < max_len) ++row;  // separator position stays a zero row
    for (const std::string& w : split_whitespace(a.text)) put(w);
    rec.sequence = std::move(seq);
  } else {
    std::vector<int> ids = bundle.bert->encode_pair_ids(a.title, a.text, bundle.max_len);
    if (fine_tune) {
      rec.token_ids = std::move(ids);
    } else {
      Eigen::MatrixXf hidden = bundle.bert->hidden_states(ids);
      Eigen::MatrixXf seq = Eigen::MatrixXf::Zero(bundle.max_len, bundle.emb_dim);
      seq.topRows(hidden.rows()) = hidden;
      rec.sequence = std::move(seq);
    }
  }
  return rec;
}

std::vector<FeatureRecord> featurize_articles(const std::vector<Article>& cleaned,
                                              const EncoderBundle& bundle,
                                              const std::string& cache_dir,
                                              bool fine_tune, std::ostream* log) {
  std::vector<FeatureRecord> records;
  records.reserve(cleaned.size());

  const bool use_cache = bundle.backend == "contextual" && !fine_tune && !cache_dir.empty();
  fs::path dir;
  if (use_cache) {
    std::uint64_t key = fnv1a64(bundle.fingerprint);
    key = fnv1a64(std::to_string(bundle.max_len), key);
    key = fnv1a64(std::to_string(kCleaningVersion), key);
    dir = fs::path(cache_dir) / ("ctx-" + to_hex(key));
    std::error_code ec;
    fs::create_directories(dir, ec);
  }

  std::size_t hits = 0;
  for (std::size_t i = 0; i < cleaned.size(); ++i) {
    const Article& a = cleaned[i];
    FeatureRecord rec;
    fs::path file;
    bool cached = false;
    if (use_cache) {
      file = dir / (to_hex(article_cache_key(a)) + ".bin");
      cached = read_cached(file, bundle.max_len, bundle.emb_dim, &rec);
    }
    if (cached) {
      ++hits;
      rec.label = a.label == Label::FAKE ? 1 : 0;
    } else {
      rec = featurize_article(a, bundle, fine_tune);
      if (use_cache) {
        int real_rows = bundle.max_len;
        while (real_rows > 0 && rec.sequence.row(real_rows - 1).isZero(0)) --real_rows;
        write_cached(file, rec, real_rows);
      }
    }
    records.push_back(std::move(rec));
    if (log && (i + 1) % 200 == 0)
      *log << "featurized " << (i + 1) << "/" << cleaned.size() << "\n";
  }
  if (log && use_cache)
    *log << "feature cache: " << hits << "/" << cleaned.size() << " hits\n";
  return records;
}

std::vector<Article> stratified_subsample(const std::vector<Article>& articles,
                                          std::size_t n, std::uint64_t seed) {
  if (n == 0 || n >= articles.size()) return articles;

  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < articles.size(); ++i) by_class[articles[i].label].push_back(i);

  // Largest-remainder apportionment of n across classes.
  const double total = static_cast<double>(articles.size());
  std::vector<std::pair<Label, std::size_t>> counts;
  std::vector<std::pair<double, Label>> remainders;
  std::size_t assigned = 0;
  for (const auto& [label, idx] : by_class) {
    const double exact = static_cast<double>(n) * static_cast<double>(idx.size()) / total;
    const std::size_t base = static_cast<std::size_t>(exact);
    counts.emplace_back(label, base);
    remainders.emplace_back(exact - static_cast<double>(base), label);
    assigned += base;
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < n && i < remainders.size(); ++i, ++assigned)
    for (auto& [label, count] : counts)
      if (label == remainders[i].second) ++count;

  Rng rng(fnv1a64("subsample", seed));
  std::vector<std::size_t> chosen;
  for (const auto& [label, count] : counts) {
    std::vector<std::size_t> idx = by_class[label];
    rng.shuffle(idx);
    const std::size_t take = std::min(count, idx.size());
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Article> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(articles[i]);
  return out;
}

std::vector<Article> select_articles(const std::vector<Article>& all,
                                     const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Article*> by_id;
  by_id.reserve(all.size());
  for (const Article& a : all) by_id[a.id] = &a;
  std::vector<Article> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw SplitError("split references unknown article id " + id);
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace stancecred

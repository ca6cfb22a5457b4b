#include "stancecred/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "stancecred/csv.hpp"
#include "stancecred/errors.hpp"
#include "stancecred/util.hpp"

namespace stancecred {

namespace {

std::string lower_ascii(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  return s;
}

/// Regex-grade tag removal: drops every '<'...'>' span. An unterminated '<'
/// is left in place (the cleaning pass turns it into a space anyway).
std::string strip_html_tags(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      std::size_t close = text.find('>', i + 1);
      if (close == std::string::npos) {
        out.append(text, i, std::string::npos);
        break;
      }
      i = close + 1;
    } else {
      out.push_back(text[i]);
      ++i;
    }
  }
  return out;
}

/// Largest-remainder apportionment of `total` over per-class counts, so that
/// every class deviates from exact proportionality by less than one item.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& class_sizes,
                                   std::size_t total, std::size_t n) {
  std::vector<std::size_t> alloc(class_sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    double quota = static_cast<double>(total) * static_cast<double>(class_sizes[c]) /
                   static_cast<double>(n);
    alloc[c] = static_cast<std::size_t>(std::floor(quota));
    assigned += alloc[c];
    remainders.emplace_back(quota - std::floor(quota), c);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
    alloc[remainders[i % remainders.size()].second] += 1;
  }
  return alloc;
}

}  // namespace

std::string to_string(Label label) { return label == Label::FAKE ? "FAKE" : "REAL"; }

Label label_from_string(const std::string& text) {
  std::string low = lower_ascii(text);
  if (low == "fake") return Label::FAKE;
  if (low == "real") return Label::REAL;
  throw RowError("unparseable label value: \"" + text + "\"");
}

std::string clean_text(const std::string& raw) {
  std::string no_tags = strip_html_tags(raw);
  std::string out;
  out.reserve(no_tags.size());
  bool pending_space = false;
  for (unsigned char c : no_tags) {
    char mapped;
    if (c >= 'a' && c <= 'z') mapped = static_cast<char>(c);
    else if (c >= 'A' && c <= 'Z') mapped = static_cast<char>(c + 32);
    else if (c >= '0' && c <= '9') mapped = static_cast<char>(c);
    else mapped = ' ';
    if (mapped == ' ') {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(mapped);
    }
  }
  return out;
}

std::vector<Article> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  auto rows = csv::parse(in);
  if (rows.empty()) throw EmptyCorpusError("dataset file has no rows: " + path);

  const auto& header = rows.front();
  auto find_col = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (lower_ascii(header[i]) == name) return i;
    throw SchemaError("dataset header is missing column \"" + name + "\"");
  };
  std::size_t title_col = find_col("title");
  std::size_t text_col = find_col("text");
  std::size_t label_col = find_col("label");
  // A leading unnamed column is the source index; use it as the id.
  bool has_index = !header.empty() && header[0].empty();

  if (rows.size() <= 1) throw EmptyCorpusError("dataset file has no data rows: " + path);

  std::vector<Article> articles;
  articles.reserve(rows.size() - 1);
  std::set<std::string> seen_ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::size_t needed = std::max({title_col, text_col, label_col}) + 1;
    if (row.size() < needed)
      throw RowError("row " + std::to_string(r) + ": expected at least " +
                     std::to_string(needed) + " fields, got " + std::to_string(row.size()));
    Article a;
    a.id = has_index ? row[0] : std::to_string(r - 1);
    a.title = row[title_col];
    a.text = row[text_col];
    try {
      a.label = label_from_string(row[label_col]);
    } catch (const RowError& e) {
      throw RowError("row " + std::to_string(r) + ": " + e.what());
    }
    if (!seen_ids.insert(a.id).second)
      throw RowError("row " + std::to_string(r) + ": duplicate article id \"" + a.id + "\"");
    articles.push_back(std::move(a));
  }
  return articles;
}

SplitSpec split_dataset(const std::vector<Article>& articles, SplitRatios ratios,
                        std::uint64_t seed) {
  const std::size_t n = articles.size();
  if (n < 10) throw SplitError("corpus too small to split: N=" + std::to_string(n));
  double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw SplitError("split ratios must sum to 1, got " + std::to_string(sum));

  const std::size_t val_total = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n)));
  const std::size_t test_total = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n)));

  // Group ids by class in a canonical order, then shuffle per class.
  std::map<Label, std::vector<std::string>> by_class;
  for (const auto& a : articles) by_class[a.label].push_back(a.id);

  std::vector<Label> classes;
  std::vector<std::size_t> class_sizes;
  for (auto& [label, ids] : by_class) {
    classes.push_back(label);
    class_sizes.push_back(ids.size());
  }
  auto val_alloc = apportion(class_sizes, val_total, n);
  auto test_alloc = apportion(class_sizes, test_total, n);

  SplitSpec spec;
  spec.seed = seed;
  spec.ratios = ratios;
  Rng rng(seed);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto& ids = by_class[classes[c]];
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);
    // A split configured with ratio zero may legitimately stay empty
    // (the cross-validation inner holdout uses test = 0).
    if (ids.size() < val_alloc[c] + test_alloc[c] + 1 ||
        (ratios.val > 0.0 && val_alloc[c] == 0) ||
        (ratios.test > 0.0 && test_alloc[c] == 0))
      throw SplitError("class " + to_string(classes[c]) +
                       " too small for every split to hold at least one article");
    std::size_t i = 0;
    for (std::size_t j = 0; j < val_alloc[c]; ++j) spec.val_ids.push_back(ids[i++]);
    for (std::size_t j = 0; j < test_alloc[c]; ++j) spec.test_ids.push_back(ids[i++]);
    for (; i < ids.size(); ++i) spec.train_ids.push_back(ids[i]);
  }
  return spec;
}

FoldAssignment make_folds(const std::vector<Article>& articles, int k, std::uint64_t seed) {
  if (k < 2) throw StratificationError("k must be at least 2, got " + std::to_string(k));

  std::map<Label, std::vector<std::string>> by_class;
  for (const auto& a : articles) by_class[a.label].push_back(a.id);
  for (const auto& [label, ids] : by_class) {
    if (ids.size() < static_cast<std::size_t>(k))
      throw StratificationError("class " + to_string(label) + " has " +
                                std::to_string(ids.size()) + " members, fewer than k=" +
                                std::to_string(k));
  }

  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  Rng rng(seed);
  // Per class, deal floor(n_c/k) ids to every fold; the remainders walk a
  // shared cursor across classes so overall fold sizes differ by at most one.
  std::size_t extra_cursor = 0;
  for (auto& [label, ids] : by_class) {
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);
    std::size_t base = ids.size() / static_cast<std::size_t>(k);
    std::size_t rem = ids.size() % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
      std::size_t take = base;
      std::size_t offset = (static_cast<std::size_t>(f) + static_cast<std::size_t>(k) -
                            extra_cursor % static_cast<std::size_t>(k)) %
                           static_cast<std::size_t>(k);
      if (offset < rem) take += 1;
      for (std::size_t j = 0; j < take; ++j) fa.fold_of[ids[pos++]] = f;
    }
    extra_cursor += rem;
  }
  return fa;
}

std::map<Label, std::size_t> class_balance(const std::vector<Article>& articles) {
  std::map<Label, std::size_t> counts{{Label::REAL, 0}, {Label::FAKE, 0}};
  for (const auto& a : articles) counts[a.label] += 1;
  return counts;
}

std::vector<Article> clean_articles(const std::vector<Article>& articles, bool warn) {
  std::vector<Article> out;
  out.reserve(articles.size());
  for (const auto& a : articles) {
    Article c = a;
    c.title = clean_text(a.title);
    c.text = clean_text(a.text);
    if (c.title.empty() || c.text.empty()) {
      if (warn)
        std::cerr << "warning: dropping article " << a.id
                  << " (empty title or body after cleaning)\n";
      continue;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string SplitSpec::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["ratios"] = {ratios.train, ratios.val, ratios.test};
  nlohmann::json assignments = nlohmann::json::object();
  for (const auto& id : train_ids) assignments[id] = "train";
  for (const auto& id : val_ids) assignments[id] = "val";
  for (const auto& id : test_ids) assignments[id] = "test";
  j["assignments"] = std::move(assignments);
  return j.dump(2);
}

SplitSpec SplitSpec::from_json(const std::string& json_text) {
  SplitSpec spec;
  try {
    nlohmann::json j = nlohmann::json::parse(json_text);
    spec.seed = j.at("seed").get<std::uint64_t>();
    auto r = j.at("ratios");
    spec.ratios = SplitRatios{r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    for (const auto& [id, part] : j.at("assignments").items()) {
      std::string p = part.get<std::string>();
      if (p == "train") spec.train_ids.push_back(id);
      else if (p == "val") spec.val_ids.push_back(id);
      else if (p == "test") spec.test_ids.push_back(id);
      else throw SchemaError("unknown split assignment \"" + p + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed SplitSpec JSON: " + std::string(e.what()));
  }
  std::sort(spec.train_ids.begin(), spec.train_ids.end());
  std::sort(spec.val_ids.begin(), spec.val_ids.end());
  std::sort(spec.test_ids.begin(), spec.test_ids.end());
  return spec;
}

std::string FoldAssignment::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["seed"] = seed;
  nlohmann::json folds = nlohmann::json::object();
  for (const auto& [id, f] : fold_of) folds[id] = f;
  j["fold_of"] = std::move(folds);
  return j.dump(2);
}

FoldAssignment FoldAssignment::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  FoldAssignment fa;
  fa.k = j.at("k").get<int>();
  fa.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [id, f] : j.at("fold_of").items()) fa.fold_of[id] = f.get<int>();
  return fa;
}

}  // namespace stancecred

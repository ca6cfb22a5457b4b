#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace stancecred {

/// FAKE is the positive class (the detection target), encoded as 1.
enum class Label : int { REAL = 0, FAKE = 1 };

std::string to_string(Label label);
/// Case-insensitive parse of "fake"/"real"; throws RowError otherwise.
Label label_from_string(const std::string& text);

/// One news item as loaded from disk. `title` and `text` are raw until
/// clean_text is applied by the pipeline.
struct Article {
  std::string id;
  std::string title;
  std::string text;
  Label label = Label::REAL;
};

/// Lowercases, strips HTML tags, maps every character outside [a-z0-9] to a
/// space and collapses runs of spaces. Idempotent; may return "".
/// Entities are not decoded: "&amp;" comes out as the token "amp".
std::string clean_text(const std::string& raw);

/// Loads a dataset CSV with header columns title,text,label (an unnamed
/// leading index column is tolerated and used as the article id).
std::vector<Article> load_dataset(const std::string& path);

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

/// Disjoint train/val/test id sets partitioning the corpus.
/// |val| = floor(val_ratio * N), |test| = floor(test_ratio * N),
/// train takes the remainder.
struct SplitSpec {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
  SplitRatios ratios;

  std::string to_json() const;
  static SplitSpec from_json(const std::string& json_text);
};

/// Deterministic label-stratified split. Throws SplitError when a split
/// would end up without at least one article of each class.
SplitSpec split_dataset(const std::vector<Article>& articles, SplitRatios ratios,
                        std::uint64_t seed);

/// Stratified k-fold assignment: every id is in exactly one fold, fold sizes
/// differ by at most one, and per-fold class counts are within one article of
/// exact proportionality.
struct FoldAssignment {
  int k = 5;
  std::unordered_map<std::string, int> fold_of;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static FoldAssignment from_json(const std::string& json_text);
};

FoldAssignment make_folds(const std::vector<Article>& articles, int k, std::uint64_t seed);

std::map<Label, std::size_t> class_balance(const std::vector<Article>& articles);

/// clean_text applied to title and text of every article; articles whose
/// cleaned title or body is empty are dropped (a warning is written to
/// stderr) because they would produce zero vectors downstream.
std::vector<Article> clean_articles(const std::vector<Article>& articles, bool warn = true);

}  // namespace stancecred

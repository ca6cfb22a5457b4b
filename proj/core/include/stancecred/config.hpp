#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stancecred/corpus.hpp"
#include "stancecred/models.hpp"

namespace stancecred {

/// Flat "section.key" -> value store parsed from a TOML-syntax file:
/// [section] headers, key = value lines, # comments, quoted strings,
/// integers, reals and booleans. Arrays and nested tables are not accepted.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text);
  static ConfigMap parse_file(const std::string& path);

  /// CLI override, e.g. set("model.dropout", "0.2"). Values use the same
  /// literal syntax as the file, except strings may be unquoted.
  void set(const std::string& dotted_key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Sorted, normalized rendering. Stable across runs; used for hashing and
  /// for the byte-identical config snapshot stored with every result.
  std::string canonical() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Everything one run needs. Mirrors the config file sections.
struct ExperimentConfig {
  // [dataset]
  std::string dataset_path;
  std::size_t max_articles = 0;  // 0 = use the full corpus

  // [encoder]
  std::string backend = "contextual";  // tokenizer | static | contextual
  int max_len = 512;
  std::size_t vocab_size = 20000;
  int embedding_dim = 100;
  std::string vectors_path;
  std::string checkpoint_dir;
  bool fine_tune = false;
  std::string cache_dir = ".stancecred-cache";

  // [model] + [train]
  ModelConfig model;
  TrainHyperparams hp;

  // [split]
  SplitRatios ratios;
  std::uint64_t seed = 42;
  int k = 5;

  // [output]
  std::string output_dir = "runs";
  bool figures = true;

  static ExperimentConfig from_map(const ConfigMap& map);
  ConfigMap to_map() const;
  std::string canonical() const;
  std::string hash() const;

  /// cache_dir after the STANCECRED_CACHE_DIR environment override.
  std::string effective_cache_dir() const;

  void validate() const;
};

}  // namespace stancecred

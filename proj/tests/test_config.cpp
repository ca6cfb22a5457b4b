#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "stancecred/config.hpp"
#include "stancecred/errors.hpp"
#include "stancecred/util.hpp"
#include "support/synthetic.hpp"

using namespace stancecred;

TEST_CASE("ConfigMap parses sections, comments and typed values") {
  auto map = ConfigMap::parse(
      "# top comment\n"
      "[dataset]\n"
      "path = \"data/news.csv\"  # trailing comment\n"
      "max_articles = 500\n"
      "\n"
      "[model]\n"
      "dropout = 0.25\n"
      "use_attention = true\n"
      "architecture = \"cnn\"\n");
  CHECK(map.get_string("dataset.path", "") == "data/news.csv");
  CHECK(map.get_int("dataset.max_articles", 0) == 500);
  CHECK(map.get_real("model.dropout", 0.0) == doctest::Approx(0.25));
  CHECK(map.get_bool("model.use_attention", false));
  CHECK(map.get_string("model.architecture", "") == "cnn");
  CHECK(map.has("model.dropout"));
  CHECK_FALSE(map.has("model.missing"));
  CHECK(map.get_int("model.missing", 7) == 7);
}

TEST_CASE("ConfigMap reports the line of a malformed entry") {
  try {
    ConfigMap::parse("[ok]\nkey = 1\nthis line has no equals\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  try {
    ConfigMap::parse("[unclosed\nkey = 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("ConfigMap rejects keys outside a section and bad types") {
  CHECK_THROWS_AS(ConfigMap::parse("key = 1\n"), ConfigError);
  auto map = ConfigMap::parse("[a]\nx = \"text\"\n");
  CHECK_THROWS_AS(map.get_int("a.x", 0), ConfigError);
  CHECK_THROWS_AS(map.get_bool("a.x", false), ConfigError);
}

TEST_CASE("set overrides and extends entries") {
  auto map = ConfigMap::parse("[model]\ndropout = 0.1\n");
  map.set("model.dropout", "0.4");
  CHECK(map.get_real("model.dropout", 0.0) == doctest::Approx(0.4));
  map.set("train.batch_size", "64");
  CHECK(map.get_int("train.batch_size", 0) == 64);
  map.set("encoder.backend", "static");
  CHECK(map.get_string("encoder.backend", "") == "static");
}

TEST_CASE("canonical form is stable under reordering and reparse") {
  auto a = ConfigMap::parse("[b]\ny = 2\n[a]\nx = 1\n");
  auto b = ConfigMap::parse("[a]\nx = 1\n[b]\ny = 2\n");
  CHECK(a.canonical() == b.canonical());
  auto reparsed = ConfigMap::parse(a.canonical());
  CHECK(reparsed.canonical() == a.canonical());
}

TEST_CASE("ExperimentConfig roundtrips through its map form") {
  ExperimentConfig cfg;
  cfg.dataset_path = "corpus.csv";
  cfg.max_articles = 123;
  cfg.backend = "static";
  cfg.max_len = 64;
  cfg.vocab_size = 5000;
  cfg.embedding_dim = 50;
  cfg.vectors_path = "vec.txt";
  cfg.fine_tune = false;
  cfg.cache_dir = "cache";
  cfg.model.architecture = Architecture::BILSTM;
  cfg.model.use_attention = true;
  cfg.model.use_stance = false;
  cfg.model.dropout = 0.3;
  cfg.hp.batch_size = 8;
  cfg.hp.max_epochs = 2;
  cfg.hp.learning_rate = 0.01;
  cfg.ratios = SplitRatios{0.6, 0.2, 0.2};
  cfg.seed = 77;
  cfg.k = 3;
  cfg.output_dir = "out";
  cfg.figures = false;

  auto back = ExperimentConfig::from_map(cfg.to_map());
  CHECK(back.dataset_path == cfg.dataset_path);
  CHECK(back.max_articles == cfg.max_articles);
  CHECK(back.backend == cfg.backend);
  CHECK(back.max_len == cfg.max_len);
  CHECK(back.vocab_size == cfg.vocab_size);
  CHECK(back.embedding_dim == cfg.embedding_dim);
  CHECK(back.vectors_path == cfg.vectors_path);
  CHECK(back.cache_dir == cfg.cache_dir);
  CHECK(back.model.architecture == cfg.model.architecture);
  CHECK(back.model.use_attention == cfg.model.use_attention);
  CHECK(back.model.use_stance == cfg.model.use_stance);
  CHECK(back.model.dropout == doctest::Approx(cfg.model.dropout));
  CHECK(back.hp.batch_size == cfg.hp.batch_size);
  CHECK(back.hp.learning_rate == doctest::Approx(cfg.hp.learning_rate));
  CHECK(back.ratios.train == doctest::Approx(cfg.ratios.train));
  CHECK(back.seed == cfg.seed);
  CHECK(back.k == cfg.k);
  CHECK(back.output_dir == cfg.output_dir);
  CHECK(back.figures == cfg.figures);
  CHECK(back.canonical() == cfg.canonical());
  CHECK(back.hash() == cfg.hash());
}

TEST_CASE("hash tracks semantic changes only") {
  ExperimentConfig a;
  a.dataset_path = "d.csv";
  ExperimentConfig b = a;
  CHECK(a.hash() == b.hash());
  b.model.dropout = 0.5;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("parse_file reads from disk") {
  auto dir = testsupport::temp_dir("config");
  auto path = (dir / "run.toml").string();
  write_file(path, "[encoder]\nbackend = \"tokenizer\"\nmax_len = 32\n");
  auto map = ConfigMap::parse_file(path);
  CHECK(map.get_string("encoder.backend", "") == "tokenizer");
  CHECK_THROWS_AS(ConfigMap::parse_file((dir / "missing.toml").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("STANCECRED_CACHE_DIR overrides the configured cache dir") {
  ExperimentConfig cfg;
  cfg.cache_dir = "configured-cache";
  unsetenv("STANCECRED_CACHE_DIR");
  CHECK(cfg.effective_cache_dir() == "configured-cache");
  setenv("STANCECRED_CACHE_DIR", "/tmp/env-cache", 1);
  CHECK(cfg.effective_cache_dir() == "/tmp/env-cache");
  unsetenv("STANCECRED_CACHE_DIR");
}

TEST_CASE("validate rejects out-of-range settings") {
  ExperimentConfig ok;
  ok.dataset_path = "d.csv";
  ok.backend = "tokenizer";
  CHECK_NOTHROW(ok.validate());

  ExperimentConfig ctx_needs_checkpoint = ok;
  ctx_needs_checkpoint.backend = "contextual";
  CHECK_THROWS_AS(ctx_needs_checkpoint.validate(), ConfigError);

  ExperimentConfig no_dataset = ok;
  no_dataset.dataset_path = "";
  CHECK_THROWS_AS(no_dataset.validate(), ConfigError);

  ExperimentConfig bad_backend = ok;
  bad_backend.backend = "quantum";
  CHECK_THROWS_AS(bad_backend.validate(), ConfigError);

  ExperimentConfig bad_ratios = ok;
  bad_ratios.ratios = SplitRatios{0.9, 0.3, 0.3};
  CHECK_THROWS_AS(bad_ratios.validate(), ConfigError);

  ExperimentConfig bad_len = ok;
  bad_len.max_len = 0;
  CHECK_THROWS_AS(bad_len.validate(), ConfigError);

  ExperimentConfig bad_dropout = ok;
  bad_dropout.model.dropout = 1.5;
  CHECK_THROWS_AS(bad_dropout.validate(), ConfigError);

  ExperimentConfig bad_lr = ok;
  bad_lr.hp.learning_rate = 0.0;
  CHECK_THROWS_AS(bad_lr.validate(), ConfigError);

  ExperimentConfig bad_k = ok;
  bad_k.k = 1;
  CHECK_THROWS_AS(bad_k.validate(), ConfigError);

  ExperimentConfig static_needs_vectors = ok;
  static_needs_vectors.backend = "static";
  static_needs_vectors.vectors_path = "";
  CHECK_THROWS_AS(static_needs_vectors.validate(), ConfigError);

  ExperimentConfig ft_needs_contextual = ok;
  ft_needs_contextual.backend = "tokenizer";
  ft_needs_contextual.fine_tune = true;
  CHECK_THROWS_AS(ft_needs_contextual.validate(), ConfigError);
}

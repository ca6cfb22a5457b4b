#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stancecred/errors.hpp"
#include "stancecred/experiment.hpp"
#include "stancecred/util.hpp"
#include "support/synthetic.hpp"

using namespace stancecred;
using nlohmann::json;

namespace {

/// Small tokenizer-backend config that trains in well under a second.
ExperimentConfig smoke_config(const std::filesystem::path& work, std::size_t n_articles = 50) {
  auto csv_path = (work / "corpus.csv").string();
  testsupport::write_corpus_csv(testsupport::synthetic_corpus(n_articles, 31), csv_path);

  ExperimentConfig cfg;
  cfg.dataset_path = csv_path;
  cfg.backend = "tokenizer";
  cfg.max_len = 16;
  cfg.embedding_dim = 12;
  cfg.cache_dir = "";
  cfg.model.architecture = Architecture::ANN;
  cfg.model.dense_units = 16;
  cfg.model.dropout = 0.0;
  cfg.model.seed = 5;
  cfg.hp.batch_size = 16;
  cfg.hp.max_epochs = 4;
  cfg.hp.learning_rate = 5e-3;
  cfg.ratios = SplitRatios{0.6, 0.2, 0.2};
  cfg.seed = 13;
  cfg.output_dir = (work / "runs").string();
  cfg.figures = true;
  return cfg;
}

bool in_unit_range(const Metric& m) { return m.value >= 0.0 && m.value <= 1.0; }

}  // namespace

TEST_CASE("run_experiment produces coherent metrics and a complete artifact") {
  auto work = testsupport::temp_dir("exp-smoke");
  auto cfg = smoke_config(work);
  std::ostringstream log;
  auto res = run_experiment(cfg, &log);

  for (const auto* rep : {&res.train, &res.val, &res.test}) {
    CHECK(in_unit_range(rep->accuracy));
    CHECK(in_unit_range(rep->precision));
    CHECK(in_unit_range(rep->recall));
    CHECK(in_unit_range(rep->f1));
    CHECK(in_unit_range(rep->roc_auc));
    CHECK(rep->n > 0);
  }
  CHECK(res.train.split == "train");
  CHECK(res.val.split == "val");
  CHECK(res.test.split == "test");
  CHECK(res.test.model == "ann");
  CHECK(res.test.backend == "tokenizer");
  CHECK(res.wall_seconds > 0.0);
  CHECK_FALSE(res.environment.empty());
  CHECK_FALSE(res.split_fingerprint.empty());
  CHECK_FALSE(res.model_version.empty());
  CHECK(res.config_hash == cfg.hash());

  std::filesystem::path run_dir(res.run_dir);
  CHECK(run_dir.parent_path() == std::filesystem::path(cfg.output_dir));
  CHECK(std::filesystem::exists(run_dir / "config.toml"));
  CHECK(std::filesystem::exists(run_dir / "result.json"));
  CHECK(std::filesystem::exists(run_dir / "split.json"));
  CHECK(std::filesystem::exists(run_dir / "status.json"));
  CHECK(std::filesystem::exists(run_dir / "model" / "weights.bin"));
  CHECK(std::filesystem::exists(run_dir / "model" / "config.json"));
  CHECK(std::filesystem::exists(run_dir / "model" / "encoder.json"));
  CHECK(std::filesystem::exists(run_dir / "model" / "vocab.txt"));
  CHECK(std::filesystem::exists(run_dir / "figures" / "test_accuracy.csv"));
  CHECK(std::filesystem::exists(std::filesystem::path(cfg.output_dir) / "latest.json"));

  // config snapshot is byte-identical to the canonical form
  CHECK(read_file((run_dir / "config.toml").string()) == cfg.canonical());

  auto status = json::parse(read_file((run_dir / "status.json").string()));
  CHECK(status.at("status").get<std::string>() == "complete");

  auto latest = json::parse(
      read_file((std::filesystem::path(cfg.output_dir) / "latest.json").string()));
  CHECK(latest.at("run_dir").get<std::string>() == res.run_dir);

  std::filesystem::remove_all(work);
}

TEST_CASE("identical configs give identical metrics and split fingerprints") {
  auto work = testsupport::temp_dir("exp-repeat");
  auto cfg = smoke_config(work);
  auto a = run_experiment(cfg);
  auto b = run_experiment(cfg);
  CHECK(a.split_fingerprint == b.split_fingerprint);
  CHECK(a.test.accuracy.value == b.test.accuracy.value);
  CHECK(a.test.cm.tp == b.test.cm.tp);
  CHECK(a.test.cm.fp == b.test.cm.fp);
  CHECK(a.train.accuracy.value == b.train.accuracy.value);
  CHECK(a.val.roc_auc.value == b.val.roc_auc.value);
  CHECK(a.model_version == b.model_version);
  CHECK(a.run_dir == b.run_dir);  // same hash, same directory
  std::filesystem::remove_all(work);
}

TEST_CASE("RunResult json roundtrip") {
  auto work = testsupport::temp_dir("exp-json");
  auto cfg = smoke_config(work, 40);
  auto res = run_experiment(cfg);
  auto back = RunResult::from_json(res.to_json());
  CHECK(back.config_text == res.config_text);
  CHECK(back.config_hash == res.config_hash);
  CHECK(back.split_fingerprint == res.split_fingerprint);
  CHECK(back.model_version == res.model_version);
  CHECK(back.run_dir == res.run_dir);
  CHECK(back.wall_seconds == doctest::Approx(res.wall_seconds));
  CHECK(back.test.accuracy.value == doctest::Approx(res.test.accuracy.value));
  CHECK(back.test.cm.tp == res.test.cm.tp);
  CHECK(back.train.n == res.train.n);
  CHECK_THROWS_AS(RunResult::from_json("{]"), LoadError);
  std::filesystem::remove_all(work);
}

TEST_CASE("failed stages mark the run incomplete and name the stage") {
  auto work = testsupport::temp_dir("exp-fail");
  auto cfg = smoke_config(work);
  cfg.dataset_path = (work / "missing.csv").string();
  try {
    run_experiment(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load");
    CHECK(std::string(e.what()).find("[load]") != std::string::npos);
  }
  auto run_dir = std::filesystem::path(cfg.output_dir) / cfg.hash();
  auto status = json::parse(read_file((run_dir / "status.json").string()));
  CHECK(status.at("status").get<std::string>() == "incomplete");
  std::filesystem::remove_all(work);
}

TEST_CASE("load_artifact restores a model that scores identically") {
  auto work = testsupport::temp_dir("exp-load");
  auto cfg = smoke_config(work);
  auto res = run_experiment(cfg);

  auto artifact = load_artifact((std::filesystem::path(res.run_dir) / "model").string());
  CHECK(artifact.model != nullptr);
  CHECK(artifact.bundle.backend == "tokenizer");
  CHECK(artifact.threshold == 0.5);
  CHECK(artifact.model->encoder_fingerprint == artifact.bundle.fingerprint);

  // refeaturize the corpus through the restored bundle and compare accuracy
  auto articles = clean_articles(load_dataset(cfg.dataset_path), false);
  auto records = featurize_articles(articles, artifact.bundle, "");
  auto probs = artifact.model->predict_proba(records);
  REQUIRE(probs.size() == records.size());
  for (double p : probs) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  CHECK_THROWS_AS(load_artifact((work / "nope").string()), IoError);
  std::filesystem::remove_all(work);
}

TEST_CASE("ablation differs only in use_stance and shares the split") {
  auto work = testsupport::temp_dir("exp-ablate");
  auto cfg = smoke_config(work);
  std::ostringstream log;
  auto ab = run_ablation(cfg, &log);

  CHECK(ab.stance_on.split_fingerprint == ab.stance_off.split_fingerprint);
  CHECK(ab.delta_test_accuracy ==
        doctest::Approx(ab.stance_on.test.accuracy.value -
                        ab.stance_off.test.accuracy.value));

  // the two snapshots differ in exactly one key
  auto on_map = ConfigMap::parse(ab.stance_on.config_text).entries();
  auto off_map = ConfigMap::parse(ab.stance_off.config_text).entries();
  REQUIRE(on_map.size() == off_map.size());
  std::vector<std::string> diff;
  for (const auto& [k, v] : on_map) {
    if (off_map.at(k) != v) diff.push_back(k);
  }
  REQUIRE(diff.size() == 1);
  CHECK(diff[0] == "model.use_stance");

  auto dir = std::filesystem::path(cfg.output_dir) /
             ("ablation-" + ab.stance_on.config_hash);
  CHECK(std::filesystem::exists(dir / "ablation.json"));
  std::filesystem::remove_all(work);
}

TEST_CASE("crossval folds partition the corpus and mean the metrics") {
  auto work = testsupport::temp_dir("exp-cv");
  auto cfg = smoke_config(work, 60);
  cfg.k = 3;
  cfg.hp.max_epochs = 2;
  std::ostringstream log;
  auto cv = run_crossval(cfg, &log);
  REQUIRE(cv.folds.size() == 3);

  // each fold is tested once; test ids across folds partition the corpus
  auto articles = load_dataset(cfg.dataset_path);
  auto cleaned = clean_articles(articles, false);
  std::size_t total_test = 0;
  for (const auto& fold : cv.folds) total_test += fold.test.n;
  CHECK(total_test == cleaned.size());

  double mean_acc = 0.0;
  double mean_auc = 0.0;
  std::int64_t tp = 0;
  for (const auto& fold : cv.folds) {
    mean_acc += fold.test.accuracy.value;
    mean_auc += fold.test.roc_auc.value;
    tp += fold.test.cm.tp;
  }
  mean_acc /= 3.0;
  mean_auc /= 3.0;
  CHECK(cv.mean_test.accuracy.value == doctest::Approx(mean_acc).epsilon(1e-9));
  CHECK(cv.mean_test.roc_auc.value == doctest::Approx(mean_auc).epsilon(1e-9));
  CHECK(cv.mean_test.cm.tp == tp);
  CHECK(cv.mean_test.n == cleaned.size());

  std::filesystem::path dir(cv.run_dir);
  CHECK(std::filesystem::exists(dir / "crossval.json"));
  CHECK(std::filesystem::exists(dir / "folds.json"));
  for (int f = 0; f < 3; ++f) {
    CHECK(std::filesystem::exists(dir / ("fold-" + std::to_string(f)) / "result.json"));
  }
  std::filesystem::remove_all(work);
}

TEST_CASE("grid covers the product and tolerates failing cells") {
  auto work = testsupport::temp_dir("exp-grid");
  auto cfg = smoke_config(work);
  cfg.hp.max_epochs = 2;

  std::ostringstream log;
  auto grid = run_grid(cfg, {"tokenizer"}, {Architecture::ANN, Architecture::CNN}, &log);
  REQUIRE(grid.cells.size() == 2);
  for (const auto& cell : grid.cells) {
    CHECK(cell.ok);
    CHECK(cell.error.empty());
    CHECK(in_unit_range(cell.result.test.accuracy));
  }
  std::filesystem::path dir(grid.run_dir);
  REQUIRE(std::filesystem::exists(dir / "grid.csv"));
  CHECK(std::filesystem::exists(dir / "grid.json"));
  auto csv_text = read_file((dir / "grid.csv").string());
  CHECK(csv_text.find("architecture,backend,status") == 0);
  CHECK(csv_text.find("ann") != std::string::npos);
  CHECK(csv_text.find("cnn") != std::string::npos);

  // a static-backend cell with no vectors file fails without killing the grid
  auto mixed = run_grid(cfg, {"tokenizer", "static"}, {Architecture::ANN});
  REQUIRE(mixed.cells.size() == 2);
  bool saw_ok = false;
  bool saw_fail = false;
  for (const auto& cell : mixed.cells) {
    if (cell.ok) saw_ok = true;
    if (!cell.ok) {
      saw_fail = true;
      CHECK_FALSE(cell.error.empty());
    }
  }
  CHECK(saw_ok);
  CHECK(saw_fail);
  CHECK_THROWS_AS(run_grid(cfg, {}, {Architecture::ANN}), ConfigError);
  std::filesystem::remove_all(work);
}

TEST_CASE("a grid cell matches the standalone run with the same settings") {
  auto work = testsupport::temp_dir("exp-grid-eq");
  auto cfg = smoke_config(work);
  cfg.hp.max_epochs = 2;

  auto grid = run_grid(cfg, {"tokenizer"}, {Architecture::CNN});
  REQUIRE(grid.cells.size() == 1);
  REQUIRE(grid.cells[0].ok);

  ExperimentConfig alone = cfg;
  alone.backend = "tokenizer";
  alone.model.architecture = Architecture::CNN;
  auto res = run_experiment(alone);
  CHECK(grid.cells[0].result.test.accuracy.value ==
        doctest::Approx(res.test.accuracy.value));
  CHECK(grid.cells[0].result.split_fingerprint == res.split_fingerprint);
  CHECK(grid.cells[0].result.model_version == res.model_version);
  std::filesystem::remove_all(work);
}

TEST_CASE("env_fingerprint mentions the toolchain") {
  auto env = env_fingerprint();
  CHECK_FALSE(env.empty());
  CHECK(env.find("eigen") != std::string::npos);
}

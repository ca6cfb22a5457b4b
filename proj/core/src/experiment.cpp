#include "stancecred/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <utility>

#include <Eigen/Core>
#include <json.hpp>

#include "stancecred/csv.hpp"
#include "stancecred/errors.hpp"
#include "stancecred/util.hpp"

namespace stancecred {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void write_status(const fs::path& run_dir, const std::string& status,
                  const std::string& detail) {
  json j;
  j["status"] = status;
  if (!detail.empty()) j["detail"] = detail;
  write_file((run_dir / "status.json").string(), j.dump(2) + "\n");
}

std::string split_fingerprint_of(const SplitSpec& split) {
  std::uint64_t h = fnv1a64("split");
  for (const std::string& id : split.train_ids) h = fnv1a64(id, h);
  h = fnv1a64("|", h);
  for (const std::string& id : split.val_ids) h = fnv1a64(id, h);
  h = fnv1a64("|", h);
  for (const std::string& id : split.test_ids) h = fnv1a64(id, h);
  return to_hex(h);
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Article> load_corpus(const ExperimentConfig& cfg) {
  std::vector<Article> cleaned = stage("load", [&] {
    return clean_articles(load_dataset(cfg.dataset_path));
  });
  if (cfg.max_articles > 0)
    cleaned = stratified_subsample(cleaned, cfg.max_articles, cfg.seed);
  return cleaned;
}

struct FitOutcome {
  MetricsReport train;
  MetricsReport val;
  MetricsReport test;
  std::unique_ptr<Model> model;
  std::unique_ptr<DistilBertFineTuner> tuner;
};

MetricsReport evaluate_records(Model& model, const std::vector<FeatureRecord>& records,
                               const std::string& backend, const char* split_name) {
  std::vector<double> scores = model.predict_proba(records);
  std::vector<int> y_true;
  y_true.reserve(records.size());
  for (const FeatureRecord& r : records) y_true.push_back(r.label);
  MetricsReport report = evaluate_predictions(y_true, scores);
  report.model = to_string(model.config().architecture);
  report.backend = backend;
  report.split = split_name;
  return report;
}

/// Featurize the three splits, train one model and evaluate all splits.
FitOutcome fit_and_evaluate(const ExperimentConfig& cfg, const EncoderBundle& bundle,
                            const std::vector<Article>& train_articles,
                            const std::vector<Article>& val_articles,
                            const std::vector<Article>& test_articles, std::ostream* log) {
  const std::string cache = cfg.effective_cache_dir();
  std::vector<FeatureRecord> train_records, val_records, test_records;
  stage("encode", [&] {
    train_records = featurize_articles(train_articles, bundle, cache, cfg.fine_tune, log);
    val_records = featurize_articles(val_articles, bundle, cache, cfg.fine_tune, log);
    test_records = featurize_articles(test_articles, bundle, cache, cfg.fine_tune, log);
    return 0;
  });

  FitOutcome out;
  stage("train", [&] {
    out.model = std::make_unique<Model>(cfg.model, bundle.input_spec(cfg.fine_tune));
    out.model->encoder_fingerprint = bundle.fingerprint;
    if (cfg.fine_tune) {
      out.tuner = std::make_unique<DistilBertFineTuner>(*bundle.bert);
      out.model->set_encoder_module(out.tuner.get());
    }
    train(*out.model, train_records, val_records, cfg.hp, log);
    return 0;
  });

  stage("evaluate", [&] {
    out.train = evaluate_records(*out.model, train_records, cfg.backend, "train");
    out.val = evaluate_records(*out.model, val_records, cfg.backend, "val");
    out.test = evaluate_records(*out.model, test_records, cfg.backend, "test");
    out.test.train_accuracy = out.train.accuracy.value;
    out.test.val_accuracy = out.val.accuracy.value;
    return 0;
  });
  return out;
}

/// Writes the self-contained model artifact directory: weights, encoder
/// metadata and whatever the encoder needs to be rebuilt elsewhere.
void persist_artifact(FitOutcome& fit, const ExperimentConfig& cfg,
                      const EncoderBundle& bundle, const fs::path& model_dir) {
  if (cfg.fine_tune) {
    const fs::path enc_dir = model_dir / "encoder";
    std::error_code ec;
    fs::create_directories(enc_dir, ec);
    if (ec) throw IoError("cannot create " + enc_dir.string());
    SafeTensors::write((enc_dir / "model.safetensors").string(), fit.tuner->export_tensors());
    fs::copy_file(fs::path(cfg.checkpoint_dir) / "vocab.txt", enc_dir / "vocab.txt",
                  fs::copy_options::overwrite_existing);
    json meta;
    meta["dim"] = fit.tuner->config().dim;
    meta["n_layers"] = fit.tuner->config().n_layers;
    meta["n_heads"] = fit.tuner->config().n_heads;
    meta["hidden_dim"] = fit.tuner->config().hidden_dim;
    meta["max_position_embeddings"] = fit.tuner->config().max_position;
    write_file((enc_dir / "config.json").string(), meta.dump(2) + "\n");
    const DistilBert exported = DistilBert::load(enc_dir.string());
    fit.model->encoder_fingerprint = to_hex(exported.fingerprint());
  }
  save_model(*fit.model, model_dir);
  if (bundle.backend == "tokenizer") bundle.vocab->save((model_dir / "vocab.txt").string());

  json enc;
  enc["backend"] = bundle.backend;
  enc["max_len"] = bundle.max_len;
  enc["embedding_dim"] = bundle.emb_dim;
  enc["vectors_path"] = cfg.vectors_path;
  enc["checkpoint_dir"] = cfg.fine_tune ? std::string("encoder") : cfg.checkpoint_dir;
  enc["fine_tuned"] = cfg.fine_tune;
  enc["fingerprint"] = fit.model->encoder_fingerprint;
  enc["cleaning_version"] = kCleaningVersion;
  write_file((model_dir / "encoder.json").string(), enc.dump(2) + "\n");
}

void write_latest_index(const ExperimentConfig& cfg, const std::string& run_dir,
                        const std::string& config_hash) {
  json j;
  j["run_dir"] = run_dir;
  j["config_hash"] = config_hash;
  write_file((fs::path(cfg.output_dir) / "latest.json").string(), j.dump(2) + "\n");
}

json report_json(const MetricsReport& r) { return json::parse(r.to_json()); }

}  // namespace

std::string env_fingerprint() {
  std::string s;
#if defined(__clang__)
  s = "clang " + std::to_string(__clang_major__) + "." + std::to_string(__clang_minor__);
#elif defined(__GNUC__)
  s = "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__) + "." +
      std::to_string(__GNUC_PATCHLEVEL__);
#else
  s = "unknown compiler";
#endif
  s += "; eigen " + std::to_string(EIGEN_WORLD_VERSION) + "." +
       std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION);
  s += "; " + std::to_string(sizeof(void*) * 8) + "-bit";
  return s;
}

std::string RunResult::to_json() const {
  json j;
  j["config_text"] = config_text;
  j["config_hash"] = config_hash;
  j["train"] = report_json(train);
  j["val"] = report_json(val);
  j["test"] = report_json(test);
  j["wall_seconds"] = wall_seconds;
  j["environment"] = environment;
  j["split_fingerprint"] = split_fingerprint;
  j["model_version"] = model_version;
  j["run_dir"] = run_dir;
  return j.dump(2);
}

RunResult RunResult::from_json(const std::string& json_text) {
  RunResult r;
  try {
    json j = json::parse(json_text);
    r.config_text = j.at("config_text").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.train = MetricsReport::from_json(j.at("train").dump());
    r.val = MetricsReport::from_json(j.at("val").dump());
    r.test = MetricsReport::from_json(j.at("test").dump());
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.environment = j.at("environment").get<std::string>();
    r.split_fingerprint = j.at("split_fingerprint").get<std::string>();
    r.model_version = j.at("model_version").get<std::string>();
    r.run_dir = j.at("run_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw LoadError("malformed RunResult JSON: " + std::string(e.what()));
  }
  return r;
}

std::string CrossvalResult::to_json() const {
  json j;
  j["config_text"] = config_text;
  j["config_hash"] = config_hash;
  j["k"] = folds.size();
  j["folds"] = json::array();
  for (const RunResult& fold : folds) j["folds"].push_back(json::parse(fold.to_json()));
  j["mean_test"] = report_json(mean_test);
  j["wall_seconds"] = wall_seconds;
  j["run_dir"] = run_dir;
  return j.dump(2);
}

RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();

  RunResult res;
  res.config_text = cfg.canonical();
  res.config_hash = cfg.hash();
  res.environment = env_fingerprint();

  const fs::path run_dir = fs::path(cfg.output_dir) / res.config_hash;
  res.run_dir = run_dir.string();
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) throw IoError("cannot create run directory " + run_dir.string());
  write_file((run_dir / "config.toml").string(), res.config_text);
  write_status(run_dir, "incomplete", "running");
  if (log) *log << "run " << res.config_hash << " -> " << res.run_dir << "\n";

  try {
    const std::vector<Article> cleaned = load_corpus(cfg);
    const SplitSpec split =
        stage("split", [&] { return split_dataset(cleaned, cfg.ratios, cfg.seed); });
    res.split_fingerprint = split_fingerprint_of(split);
    write_file((run_dir / "split.json").string(), split.to_json());

    const std::vector<Article> train_articles = select_articles(cleaned, split.train_ids);
    const std::vector<Article> val_articles = select_articles(cleaned, split.val_ids);
    const std::vector<Article> test_articles = select_articles(cleaned, split.test_ids);

    const EncoderBundle bundle =
        stage("encode", [&] { return build_encoder(cfg, train_articles); });
    FitOutcome fit =
        fit_and_evaluate(cfg, bundle, train_articles, val_articles, test_articles, log);
    res.train = fit.train;
    res.val = fit.val;
    res.test = fit.test;

    stage("persist", [&] {
      persist_artifact(fit, cfg, bundle, run_dir / "model");
      return 0;
    });
    res.model_version = model_version(*fit.model);
    res.wall_seconds = elapsed_seconds(t0);
    write_file((run_dir / "result.json").string(), res.to_json() + "\n");
    if (cfg.figures) export_figures({res.test}, (run_dir / "figures").string());
    write_status(run_dir, "complete", "");
    write_latest_index(cfg, res.run_dir, res.config_hash);
  } catch (const std::exception& e) {
    write_status(run_dir, "incomplete", e.what());
    throw;
  }
  if (log)
    *log << "test accuracy " << res.test.accuracy.value << " (" << res.wall_seconds
         << "s)\n";
  return res;
}

AblationResult run_ablation(const ExperimentConfig& cfg, std::ostream* log) {
  ExperimentConfig on = cfg;
  on.model.use_stance = true;
  ExperimentConfig off = cfg;
  off.model.use_stance = false;

  AblationResult ab;
  ab.stance_on = run_experiment(on, log);
  ab.stance_off = run_experiment(off, log);
  if (ab.stance_on.split_fingerprint != ab.stance_off.split_fingerprint)
    throw TrainingError("ablation runs diverged on the data split");
  ab.delta_test_accuracy = ab.stance_on.test.accuracy.value - ab.stance_off.test.accuracy.value;

  const fs::path dir = fs::path(cfg.output_dir) / ("ablation-" + on.hash());
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!ec) {
    json j;
    j["stance_on"] = {{"config_hash", ab.stance_on.config_hash},
                      {"test_accuracy", ab.stance_on.test.accuracy.value},
                      {"run_dir", ab.stance_on.run_dir}};
    j["stance_off"] = {{"config_hash", ab.stance_off.config_hash},
                       {"test_accuracy", ab.stance_off.test.accuracy.value},
                       {"run_dir", ab.stance_off.run_dir}};
    j["delta_test_accuracy"] = ab.delta_test_accuracy;
    j["split_fingerprint"] = ab.stance_on.split_fingerprint;
    write_file((dir / "ablation.json").string(), j.dump(2) + "\n");
  }
  return ab;
}

CrossvalResult run_crossval(const ExperimentConfig& cfg, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();

  CrossvalResult cv;
  cv.config_text = cfg.canonical();
  cv.config_hash = cfg.hash();
  const fs::path run_dir = fs::path(cfg.output_dir) / ("cv-" + cv.config_hash);
  cv.run_dir = run_dir.string();
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) throw IoError("cannot create run directory " + run_dir.string());
  write_file((run_dir / "config.toml").string(), cv.config_text);
  write_status(run_dir, "incomplete", "running");

  try {
    const std::vector<Article> cleaned = load_corpus(cfg);
    const FoldAssignment folds =
        stage("split", [&] { return make_folds(cleaned, cfg.k, cfg.seed); });
    write_file((run_dir / "folds.json").string(), folds.to_json());

    // Static and contextual encoders do not depend on the training split,
    // so one bundle is shared across folds; the learned-index vocabulary is
    // rebuilt per fold from that fold's training articles.
    EncoderBundle shared;
    if (cfg.backend != "tokenizer")
      shared = stage("encode", [&] { return build_encoder(cfg, cleaned); });

    const SplitRatios inner{1.0 - cfg.ratios.val, cfg.ratios.val, 0.0};
    for (int f = 0; f < cfg.k; ++f) {
      const auto fold_t0 = std::chrono::steady_clock::now();
      if (log) *log << "fold " << (f + 1) << "/" << cfg.k << "\n";

      std::vector<Article> test_articles, rest;
      for (const Article& a : cleaned)
        (folds.fold_of.at(a.id) == f ? test_articles : rest).push_back(a);

      const SplitSpec inner_split =
          stage("split", [&] { return split_dataset(rest, inner, cfg.seed); });
      const std::vector<Article> train_articles = select_articles(rest, inner_split.train_ids);
      const std::vector<Article> val_articles = select_articles(rest, inner_split.val_ids);

      EncoderBundle fold_bundle;
      const EncoderBundle* bundle = &shared;
      if (cfg.backend == "tokenizer") {
        fold_bundle = stage("encode", [&] { return build_encoder(cfg, train_articles); });
        bundle = &fold_bundle;
      }

      FitOutcome fit =
          fit_and_evaluate(cfg, *bundle, train_articles, val_articles, test_articles, log);

      RunResult fold_res;
      fold_res.config_text = cv.config_text;
      fold_res.config_hash = cv.config_hash;
      fold_res.environment = env_fingerprint();
      SplitSpec fold_split = inner_split;
      for (const Article& a : test_articles) fold_split.test_ids.push_back(a.id);
      fold_res.split_fingerprint = split_fingerprint_of(fold_split);
      fold_res.train = fit.train;
      fold_res.val = fit.val;
      fold_res.test = fit.test;
      fold_res.model_version = model_version(*fit.model);
      fold_res.wall_seconds = elapsed_seconds(fold_t0);

      const fs::path fold_dir = run_dir / ("fold-" + std::to_string(f));
      fold_res.run_dir = fold_dir.string();
      fs::create_directories(fold_dir, ec);
      stage("persist", [&] {
        persist_artifact(fit, cfg, *bundle, fold_dir / "model");
        write_file((fold_dir / "result.json").string(), fold_res.to_json() + "\n");
        return 0;
      });
      cv.folds.push_back(std::move(fold_res));
    }

    const double k = static_cast<double>(cv.folds.size());
    MetricsReport& mean = cv.mean_test;
    mean.model = cv.folds.front().test.model;
    mean.backend = cfg.backend;
    mean.split = "test-mean";
    for (const RunResult& fold : cv.folds) {
      const MetricsReport& t = fold.test;
      mean.n += t.n;
      mean.cm.tp += t.cm.tp;
      mean.cm.fp += t.cm.fp;
      mean.cm.fn += t.cm.fn;
      mean.cm.tn += t.cm.tn;
      auto acc = [&](Metric& into, const Metric& from) {
        into.value += from.value / k;
        into.defined = into.defined && from.defined;
      };
      acc(mean.accuracy, t.accuracy);
      acc(mean.precision, t.precision);
      acc(mean.recall, t.recall);
      acc(mean.f1, t.f1);
      acc(mean.roc_auc, t.roc_auc);
      acc(mean.precision_negative, t.precision_negative);
      acc(mean.recall_negative, t.recall_negative);
      acc(mean.macro_precision, t.macro_precision);
      acc(mean.macro_recall, t.macro_recall);
      acc(mean.macro_f1, t.macro_f1);
      mean.train_accuracy += t.train_accuracy / k;
      mean.val_accuracy += t.val_accuracy / k;
    }

    cv.wall_seconds = elapsed_seconds(t0);
    write_file((run_dir / "crossval.json").string(), cv.to_json() + "\n");
    write_status(run_dir, "complete", "");
    write_latest_index(cfg, cv.run_dir, cv.config_hash);
  } catch (const std::exception& e) {
    write_status(run_dir, "incomplete", e.what());
    throw;
  }
  return cv;
}

GridResult run_grid(const ExperimentConfig& cfg, const std::vector<std::string>& backends,
                    const std::vector<Architecture>& architectures, std::ostream* log) {
  if (backends.empty() || architectures.empty())
    throw ConfigError("grid axes must be non-empty");

  GridResult grid;
  const fs::path dir = fs::path(cfg.output_dir) / ("grid-" + cfg.hash());
  grid.run_dir = dir.string();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string());

  for (const std::string& backend : backends) {
    for (const Architecture arch : architectures) {
      GridCell cell;
      cell.backend = backend;
      cell.architecture = arch;
      ExperimentConfig cell_cfg = cfg;
      cell_cfg.backend = backend;
      cell_cfg.model.architecture = arch;
      if (log) *log << "grid cell " << backend << " x " << to_string(arch) << "\n";
      try {
        cell.result = run_experiment(cell_cfg, log);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
        if (log) *log << "cell failed: " << e.what() << "\n";
      }
      grid.cells.push_back(std::move(cell));
    }
  }

  std::string csv_text =
      "architecture,backend,status,train_accuracy,val_accuracy,test_accuracy,"
      "precision,recall,f1,roc_auc,error\n";
  json rows = json::array();
  for (const GridCell& cell : grid.cells) {
    std::vector<std::string> row{to_string(cell.architecture), cell.backend};
    json jrow;
    jrow["architecture"] = to_string(cell.architecture);
    jrow["backend"] = cell.backend;
    if (cell.ok) {
      const MetricsReport& t = cell.result.test;
      row.push_back("ok");
      char buf[64];
      auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
      };
      row.push_back(num(t.train_accuracy));
      row.push_back(num(t.val_accuracy));
      row.push_back(num(t.accuracy.value));
      row.push_back(num(t.precision.value));
      row.push_back(num(t.recall.value));
      row.push_back(num(t.f1.value));
      row.push_back(num(t.roc_auc.value));
      row.push_back("");
      jrow["status"] = "ok";
      jrow["result"] = json::parse(cell.result.to_json());
    } else {
      row.insert(row.end(), {"failed", "", "", "", "", "", "", "", cell.error});
      jrow["status"] = "failed";
      jrow["error"] = cell.error;
    }
    csv_text += csv::join_row(row) + "\n";
    rows.push_back(std::move(jrow));
  }
  write_file((dir / "grid.csv").string(), csv_text);
  write_file((dir / "grid.json").string(), rows.dump(2) + "\n");
  return grid;
}

LoadedArtifact load_artifact(const std::string& model_dir, const std::string& vectors_override,
                             const std::string& checkpoint_override) {
  const fs::path dir(model_dir);
  LoadedArtifact art;
  art.model = load_model(dir);

  json enc;
  try {
    enc = json::parse(read_file((dir / "encoder.json").string()));
  } catch (const json::exception& e) {
    throw LoadError("malformed encoder.json: " + std::string(e.what()));
  }

  EncoderBundle& b = art.bundle;
  b.backend = enc.at("backend").get<std::string>();
  b.max_len = enc.at("max_len").get<int>();
  const std::string fingerprint = enc.at("fingerprint").get<std::string>();
  const bool fine_tuned = enc.value("fine_tuned", false);

  if (b.backend == "tokenizer") {
    b.vocab = std::make_unique<Vocabulary>(Vocabulary::load((dir / "vocab.txt").string()));
    b.emb_dim = enc.at("embedding_dim").get<int>();
    b.vocab_rows = b.vocab->size() + 1;
    b.stance_encoder = std::make_unique<WordIndexEncoder>(*b.vocab, b.emb_dim);
    b.fingerprint = to_hex(fnv1a64(std::to_string(b.emb_dim), b.vocab->fingerprint()));
  } else if (b.backend == "static") {
    std::string path = vectors_override.empty()
                           ? enc.at("vectors_path").get<std::string>()
                           : vectors_override;
    b.table = std::make_unique<StaticEmbeddingTable>(StaticEmbeddingTable::load(path));
    b.emb_dim = b.table->dim();
    b.stance_encoder = std::make_unique<StaticVectorEncoder>(*b.table);
    b.fingerprint = to_hex(b.table->fingerprint());
  } else if (b.backend == "contextual") {
    std::string path;
    if (fine_tuned)
      path = (dir / enc.at("checkpoint_dir").get<std::string>()).string();
    else
      path = checkpoint_override.empty() ? enc.at("checkpoint_dir").get<std::string>()
                                         : checkpoint_override;
    b.bert = std::make_shared<DistilBert>(DistilBert::load(path));
    b.emb_dim = b.bert->config().dim;
    b.stance_encoder = std::make_unique<ContextualTextEncoder>(*b.bert, b.max_len);
    b.fingerprint = to_hex(b.bert->fingerprint());
  } else {
    throw LoadError("encoder.json names unknown backend '" + b.backend + "'");
  }

  if (b.fingerprint != fingerprint)
    throw VersionError("encoder fingerprint " + b.fingerprint +
                       " does not match the artifact's " + fingerprint);
  if (art.model->encoder_fingerprint != b.fingerprint)
    throw VersionError("model was trained against encoder " + art.model->encoder_fingerprint +
                       ", loaded " + b.fingerprint);
  if (art.model->input_spec().seq_len != b.max_len ||
      art.model->input_spec().emb_dim != b.emb_dim)
    throw VersionError("artifact encoder shape does not match the model input spec");
  return art;
}

}  // namespace stancecred

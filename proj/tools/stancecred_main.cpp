#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stancecred/config.hpp"
#include "stancecred/csv.hpp"
#include "stancecred/errors.hpp"
#include "stancecred/experiment.hpp"
#include "stancecred/http_server.hpp"
#include "stancecred/pipeline.hpp"
#include "stancecred/serve.hpp"
#include "stancecred/stance.hpp"
#include "stancecred/util.hpp"

namespace {

namespace fs = std::filesystem;
using namespace stancecred;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.path, "TOML config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", args.sets,
                  "override a config key, e.g. --set model.dropout=0.2 (repeatable)");
}

ExperimentConfig make_config(const ConfigArgs& args) {
  ConfigMap map;
  if (!args.path.empty()) map = ConfigMap::parse_file(args.path);
  for (const std::string& kv : args.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects section.key=value, got '" + kv + "'");
    map.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return ExperimentConfig::from_map(map);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void print_report(const MetricsReport& r, std::ostream& out) {
  out << "split " << r.split << " (n=" << r.n << ")\n"
      << "  accuracy   " << fmt(r.accuracy.value) << "\n"
      << "  precision  " << fmt(r.precision.value) << (r.precision.defined ? "" : " (undefined)")
      << "\n"
      << "  recall     " << fmt(r.recall.value) << (r.recall.defined ? "" : " (undefined)")
      << "\n"
      << "  f1         " << fmt(r.f1.value) << (r.f1.defined ? "" : " (undefined)") << "\n"
      << "  roc auc    " << fmt(r.roc_auc.value) << (r.roc_auc.defined ? "" : " (undefined)")
      << "\n";
}

int cmd_ingest(const ConfigArgs& cargs, const std::string& out_path) {
  ExperimentConfig cfg = make_config(cargs);
  if (cfg.dataset_path.empty()) throw ConfigError("dataset.path is required");
  const std::vector<Article> raw = load_dataset(cfg.dataset_path);
  std::vector<Article> cleaned = clean_articles(raw);
  if (cfg.max_articles > 0)
    cleaned = stratified_subsample(cleaned, cfg.max_articles, cfg.seed);

  std::cout << "loaded " << raw.size() << " articles, " << cleaned.size()
            << " usable after cleaning";
  if (cfg.max_articles > 0) std::cout << " (subsampled to " << cleaned.size() << ")";
  std::cout << "\n";
  for (const auto& [label, count] : class_balance(cleaned))
    std::cout << "  " << to_string(label) << ": " << count << "\n";

  if (!out_path.empty()) {
    std::string text = ",title,text,label\n";
    for (const Article& a : cleaned)
      text += csv::join_row({a.id, a.title, a.text, to_string(a.label)}) + "\n";
    write_file(out_path, text);
    std::cout << "cleaned corpus written to " << out_path << "\n";
  }
  return 0;
}

int cmd_featurize(const ConfigArgs& cargs, const std::string& out_dir_flag) {
  ExperimentConfig cfg = make_config(cargs);
  cfg.validate();
  std::vector<Article> cleaned = clean_articles(load_dataset(cfg.dataset_path));
  if (cfg.max_articles > 0)
    cleaned = stratified_subsample(cleaned, cfg.max_articles, cfg.seed);
  const SplitSpec split = split_dataset(cleaned, cfg.ratios, cfg.seed);
  const std::vector<Article> train_articles = select_articles(cleaned, split.train_ids);

  const EncoderBundle bundle = build_encoder(cfg, train_articles);
  const std::vector<FeatureRecord> records =
      featurize_articles(cleaned, bundle, cfg.effective_cache_dir(), false, &std::cerr);

  const fs::path out_dir =
      out_dir_flag.empty() ? fs::path(cfg.output_dir) / "features" : fs::path(out_dir_flag);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string());

  std::vector<std::pair<std::string, StanceScore>> stance_rows;
  stance_rows.reserve(cleaned.size());
  for (std::size_t i = 0; i < cleaned.size(); ++i)
    stance_rows.emplace_back(cleaned[i].id,
                             StanceScore{records[i].stance, records[i].stance_degenerate});
  export_stance_csv(stance_rows, (out_dir / "stance.csv").string());

  nlohmann::json j;
  j["articles"] = cleaned.size();
  j["backend"] = bundle.backend;
  j["max_len"] = bundle.max_len;
  j["embedding_dim"] = bundle.emb_dim;
  j["encoder_fingerprint"] = bundle.fingerprint;
  j["cache_dir"] = cfg.effective_cache_dir();
  write_file((out_dir / "features.json").string(), j.dump(2) + "\n");
  std::cout << "featurized " << cleaned.size() << " articles (" << bundle.backend
            << "), stance scores in " << (out_dir / "stance.csv").string() << "\n";
  return 0;
}

int cmd_train(const ConfigArgs& cargs) {
  const ExperimentConfig cfg = make_config(cargs);
  const RunResult res = run_experiment(cfg, &std::cerr);
  std::cout << "run " << res.config_hash << " finished in " << fmt(res.wall_seconds)
            << "s\n";
  print_report(res.test, std::cout);
  std::cout << "train accuracy " << fmt(res.test.train_accuracy) << ", val accuracy "
            << fmt(res.test.val_accuracy) << "\n"
            << "artifacts: " << res.run_dir << "\n";
  return 0;
}

int cmd_evaluate(const ConfigArgs& cargs, std::string run_dir,
                 const std::string& vectors_override,
                 const std::string& checkpoint_override) {
  ConfigArgs merged = cargs;
  if (run_dir.empty()) {
    // Fall back to the latest run under the configured output directory.
    const ExperimentConfig base = make_config(cargs);
    const fs::path index = fs::path(base.output_dir) / "latest.json";
    if (!fs::exists(index))
      throw ConfigError("no --run given and " + index.string() + " does not exist");
    const nlohmann::json j = nlohmann::json::parse(read_file(index.string()));
    run_dir = j.at("run_dir").get<std::string>();
  }
  const fs::path run(run_dir);
  if (merged.path.empty()) {
    if (!fs::exists(run / "config.toml"))
      throw ConfigError("run directory has no config.toml: " + run.string());
    merged.path = (run / "config.toml").string();
  }
  const ExperimentConfig cfg = make_config(merged);

  LoadedArtifact artifact =
      load_artifact((run / "model").string(), vectors_override, checkpoint_override);

  std::vector<Article> cleaned = clean_articles(load_dataset(cfg.dataset_path));
  if (cfg.max_articles > 0)
    cleaned = stratified_subsample(cleaned, cfg.max_articles, cfg.seed);
  const SplitSpec split = split_dataset(cleaned, cfg.ratios, cfg.seed);
  const std::vector<Article> test_articles = select_articles(cleaned, split.test_ids);
  const std::vector<FeatureRecord> records =
      featurize_articles(test_articles, artifact.bundle, cfg.effective_cache_dir());

  std::vector<double> scores = artifact.model->predict_proba(records);
  std::vector<int> y_true;
  for (const FeatureRecord& r : records) y_true.push_back(r.label);
  MetricsReport report = evaluate_predictions(y_true, scores);
  report.model = to_string(artifact.model->config().architecture);
  report.backend = artifact.bundle.backend;
  report.split = "test";
  print_report(report, std::cout);
  std::cout << report.to_json() << "\n";
  return 0;
}

int cmd_ablate(const ConfigArgs& cargs) {
  const ExperimentConfig cfg = make_config(cargs);
  const AblationResult ab = run_ablation(cfg, &std::cerr);
  std::cout << "stance on:  test accuracy " << fmt(ab.stance_on.test.accuracy.value) << " ("
            << ab.stance_on.run_dir << ")\n"
            << "stance off: test accuracy " << fmt(ab.stance_off.test.accuracy.value) << " ("
            << ab.stance_off.run_dir << ")\n"
            << "delta (on - off): " << fmt(ab.delta_test_accuracy) << "\n";
  return 0;
}

int cmd_crossval(const ConfigArgs& cargs) {
  const ExperimentConfig cfg = make_config(cargs);
  const CrossvalResult cv = run_crossval(cfg, &std::cerr);
  for (std::size_t f = 0; f < cv.folds.size(); ++f)
    std::cout << "fold " << (f + 1) << ": test accuracy "
              << fmt(cv.folds[f].test.accuracy.value) << "\n";
  std::cout << "mean over " << cv.folds.size() << " folds\n";
  print_report(cv.mean_test, std::cout);
  std::cout << "artifacts: " << cv.run_dir << "\n";
  return 0;
}

int cmd_grid(const ConfigArgs& cargs, const std::vector<std::string>& backends,
             const std::vector<std::string>& archs) {
  const ExperimentConfig cfg = make_config(cargs);
  std::vector<std::string> backend_axis = backends;
  if (backend_axis.empty()) backend_axis = {cfg.backend};
  std::vector<Architecture> arch_axis;
  if (archs.empty())
    arch_axis = {Architecture::ANN, Architecture::LSTM, Architecture::BILSTM,
                 Architecture::CNN};
  else
    for (const std::string& a : archs) arch_axis.push_back(architecture_from_string(a));

  const GridResult grid = run_grid(cfg, backend_axis, arch_axis, &std::cerr);
  for (const GridCell& cell : grid.cells) {
    std::cout << cell.backend << " x " << to_string(cell.architecture) << ": ";
    if (cell.ok)
      std::cout << "test accuracy " << fmt(cell.result.test.accuracy.value) << "\n";
    else
      std::cout << "failed (" << cell.error << ")\n";
  }
  std::cout << "table: " << grid.run_dir << "/grid.csv\n";
  return 0;
}

int cmd_predict(const std::string& model_dir, const std::string& title,
                const std::string& text, const std::string& input_csv, double threshold,
                const std::string& vectors_override, const std::string& checkpoint_override) {
  const ScoringService service(model_dir, vectors_override, checkpoint_override, threshold);
  if (!input_csv.empty()) {
    const std::vector<Article> articles = load_dataset(input_csv);
    for (const Article& a : articles) {
      const ScoreResponse out = service.score({a.title, a.text});
      nlohmann::json j = nlohmann::json::parse(out.to_json());
      j["id"] = a.id;
      std::cout << j.dump() << "\n";
    }
    return 0;
  }
  if (title.empty() && text.empty())
    throw ConfigError("predict needs --title/--text or --input");
  const ScoreResponse out = service.score({title, text});
  std::cout << out.to_json() << "\n";
  return 0;
}

int cmd_serve(const std::string& model_dir, const std::string& host, int port,
              double threshold, const std::string& vectors_override,
              const std::string& checkpoint_override) {
  const ScoringService service(model_dir, vectors_override, checkpoint_override, threshold);
  serve_http(service, host, port, &std::cerr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stance-aware fake news detection toolkit"};
  app.require_subcommand(1);

  ConfigArgs ingest_args, feat_args, train_args, eval_args, ablate_args, cv_args, grid_args;

  auto* ingest = app.add_subcommand("ingest", "load, clean and summarize a dataset");
  add_config_options(ingest, ingest_args);
  std::string ingest_out;
  ingest->add_option("-o,--out", ingest_out, "write the cleaned corpus CSV here");

  auto* featurize =
      app.add_subcommand("featurize", "precompute features and stance scores");
  add_config_options(featurize, feat_args);
  std::string feat_out;
  featurize->add_option("-o,--out", feat_out, "output directory (default <output>/features)");

  auto* train = app.add_subcommand("train", "run one experiment end to end");
  add_config_options(train, train_args);

  auto* evaluate = app.add_subcommand("evaluate", "re-evaluate a persisted run's test split");
  add_config_options(evaluate, eval_args);
  std::string eval_run, eval_vectors, eval_checkpoint;
  evaluate->add_option("-r,--run", eval_run, "run directory (default: latest.json index)");
  evaluate->add_option("--vectors", eval_vectors, "override the recorded vectors path");
  evaluate->add_option("--checkpoint", eval_checkpoint,
                       "override the recorded checkpoint directory");

  auto* ablate = app.add_subcommand("ablate", "paired stance on/off runs");
  add_config_options(ablate, ablate_args);

  auto* crossval = app.add_subcommand("crossval", "stratified k-fold cross-validation");
  add_config_options(crossval, cv_args);

  auto* grid = app.add_subcommand("grid", "backend x architecture grid");
  add_config_options(grid, grid_args);
  std::vector<std::string> grid_backends, grid_archs;
  grid->add_option("--backends", grid_backends,
                   "backends to sweep (default: the configured one)")
      ->delimiter(',');
  grid->add_option("--architectures", grid_archs,
                   "architectures to sweep (default: ANN,LSTM,BILSTM,CNN)")
      ->delimiter(',');

  auto* predict = app.add_subcommand("predict", "score articles with a saved model");
  std::string pr_model, pr_title, pr_text, pr_input, pr_vectors, pr_checkpoint;
  double pr_threshold = 0.5;
  predict->add_option("-m,--model", pr_model, "model artifact directory")->required();
  predict->add_option("--title", pr_title, "article title");
  predict->add_option("--text", pr_text, "article body");
  predict->add_option("-i,--input", pr_input, "CSV of articles to score");
  predict->add_option("--threshold", pr_threshold, "FAKE decision threshold");
  predict->add_option("--vectors", pr_vectors, "override the recorded vectors path");
  predict->add_option("--checkpoint", pr_checkpoint,
                      "override the recorded checkpoint directory");

  auto* serve = app.add_subcommand("serve", "HTTP scoring service");
  std::string sv_model, sv_host = "127.0.0.1", sv_vectors, sv_checkpoint;
  int sv_port = 8080;
  double sv_threshold = 0.5;
  serve->add_option("-m,--model", sv_model, "model artifact directory")->required();
  serve->add_option("--host", sv_host, "bind address");
  serve->add_option("--port", sv_port, "bind port");
  serve->add_option("--threshold", sv_threshold, "FAKE decision threshold");
  serve->add_option("--vectors", sv_vectors, "override the recorded vectors path");
  serve->add_option("--checkpoint", sv_checkpoint,
                    "override the recorded checkpoint directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_args, ingest_out);
    if (featurize->parsed()) return cmd_featurize(feat_args, feat_out);
    if (train->parsed()) return cmd_train(train_args);
    if (evaluate->parsed())
      return cmd_evaluate(eval_args, eval_run, eval_vectors, eval_checkpoint);
    if (ablate->parsed()) return cmd_ablate(ablate_args);
    if (crossval->parsed()) return cmd_crossval(cv_args);
    if (grid->parsed()) return cmd_grid(grid_args, grid_backends, grid_archs);
    if (predict->parsed())
      return cmd_predict(pr_model, pr_title, pr_text, pr_input, pr_threshold, pr_vectors,
                         pr_checkpoint);
    if (serve->parsed())
      return cmd_serve(sv_model, sv_host, sv_port, sv_threshold, sv_vectors, sv_checkpoint);
  } catch (const stancecred::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "stancecred/config.hpp"
#include "stancecred/eval.hpp"
#include "stancecred/models.hpp"
#include "stancecred/pipeline.hpp"

namespace stancecred {

/// Compiler, Eigen version and pointer width; recorded with every result.
std::string env_fingerprint();

struct RunResult {
  std::string config_text;  // canonical snapshot, byte-identical to the input
  std::string config_hash;
  MetricsReport train;
  MetricsReport val;
  MetricsReport test;  // also carries train/val accuracy
  double wall_seconds = 0.0;
  std::string environment;
  std::string split_fingerprint;  // hash over the ordered train/val/test ids
  std::string model_version;
  std::string run_dir;

  std::string to_json() const;
  static RunResult from_json(const std::string& json_text);
};

struct AblationResult {
  RunResult stance_on;
  RunResult stance_off;
  double delta_test_accuracy = 0.0;  // on minus off, in accuracy points
};

struct CrossvalResult {
  std::string config_text;
  std::string config_hash;
  std::vector<RunResult> folds;
  /// Arithmetic mean of the per-fold test metrics; the confusion matrix is
  /// summed and n is the corpus size (folds partition it).
  MetricsReport mean_test;
  double wall_seconds = 0.0;
  std::string run_dir;

  std::string to_json() const;
};

struct GridCell {
  std::string backend;
  Architecture architecture = Architecture::CNN;
  bool ok = false;
  std::string error;
  RunResult result;  // meaningful only when ok
};

struct GridResult {
  std::vector<GridCell> cells;
  std::string run_dir;
};

/// One full pipeline pass: load, clean, split, encode (with stance), train,
/// evaluate, persist. The run directory is <output_dir>/<config hash> and
/// holds config.toml, result.json, the model artifact and figures; an index
/// file <output_dir>/latest.json points at the most recent run.
RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Two runs identical except model.use_stance; verifies they saw the same
/// split.
AblationResult run_ablation(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Stratified k-fold cross-validation (k = cfg.k). Each fold is the test set
/// once; the rest is split train/val using the configured validation ratio
/// for early stopping.
CrossvalResult run_crossval(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Cross product of backends x architectures over a shared split. Per-cell
/// failures are recorded and the grid continues. Writes grid.csv + grid.json.
GridResult run_grid(const ExperimentConfig& cfg, const std::vector<std::string>& backends,
                    const std::vector<Architecture>& architectures,
                    std::ostream* log = nullptr);

/// A trained model plus the encoder rebuilt from the artifact's encoder.json.
/// Non-empty overrides replace the recorded vectors/checkpoint paths (the
/// artifact may have moved machines); fingerprints must still match.
struct LoadedArtifact {
  std::unique_ptr<Model> model;
  EncoderBundle bundle;
  double threshold = 0.5;
};

LoadedArtifact load_artifact(const std::string& model_dir,
                             const std::string& vectors_override = "",
                             const std::string& checkpoint_override = "");

}  // namespace stancecred

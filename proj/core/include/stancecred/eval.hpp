#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stancecred {

/// Counts with FAKE (label 1) as the positive class.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// A ratio metric; `defined` is false when the denominator was zero,
/// in which case `value` is reported as 0 rather than failing the run.
struct Metric {
  double value = 0.0;
  bool defined = true;
};

Metric precision(const ConfusionMatrix& cm);
Metric recall(const ConfusionMatrix& cm);
Metric accuracy(const ConfusionMatrix& cm);
Metric f1(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC points swept over all distinct score thresholds, from (0,0) to (1,1).
/// Tied scores collapse into a single point, which makes the trapezoidal
/// area equal to the average-rank formulation.
std::vector<RocPoint> roc_curve(const std::vector<int>& y_true,
                                const std::vector<double>& scores);

/// Area under the ROC curve. Throws EvalError when only one class is present.
double roc_auc(const std::vector<int>& y_true, const std::vector<double>& scores);

/// Per-run evaluation summary, one per (model, backend, split).
/// The test-split report additionally carries the run's train/val accuracy
/// so one report per model is enough to tabulate every figure panel.
struct MetricsReport {
  std::string model;
  std::string backend;
  std::string split;
  std::size_t n = 0;
  ConfusionMatrix cm;
  Metric accuracy;
  Metric precision;  // positive class (FAKE)
  Metric recall;
  Metric f1;
  Metric roc_auc;
  // Per-class and macro companions; several published tables show precision
  // equal to recall, which suggests an unnamed averaging scheme, so both
  // views are kept available.
  Metric precision_negative;
  Metric recall_negative;
  Metric macro_precision;
  Metric macro_recall;
  Metric macro_f1;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  std::vector<RocPoint> roc_points;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& json_text);
};

/// Builds the full report from labels and fake-probabilities.
MetricsReport evaluate_predictions(const std::vector<int>& y_true,
                                   const std::vector<double>& scores,
                                   double threshold = 0.5);

/// Writes per-metric bar-chart data (CSV + SVG) and a per-model ROC curve
/// CSV: train_accuracy, test_accuracy, precision, recall, f1, roc_auc.
/// Reports are expected to be test-split summaries, one per model.
void export_figures(const std::vector<MetricsReport>& reports, const std::string& out_dir);

}  // namespace stancecred

#include "stancecred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "stancecred/csv.hpp"
#include "stancecred/errors.hpp"

namespace stancecred {

namespace fs = std::filesystem;

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size())
    throw EvalError("confusion: length mismatch, " + std::to_string(y_true.size()) + " vs " +
                    std::to_string(y_pred.size()));
  if (y_true.empty()) throw EvalError("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1)
      (y_pred[i] == 1 ? cm.tp : cm.fn) += 1;
    else
      (y_pred[i] == 1 ? cm.fp : cm.tn) += 1;
  }
  return cm;
}

namespace {
Metric ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return {0.0, false};
  return {static_cast<double>(num) / static_cast<double>(den), true};
}
}  // namespace

Metric precision(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fp); }
Metric recall(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fn); }
Metric accuracy(const ConfusionMatrix& cm) { return ratio(cm.tp + cm.tn, cm.total()); }

Metric f1(const ConfusionMatrix& cm) {
  Metric p = precision(cm);
  Metric r = recall(cm);
  if (!p.defined || !r.defined || p.value + r.value == 0.0) return {0.0, false};
  return {2.0 * p.value * r.value / (p.value + r.value), true};
}

std::vector<RocPoint> roc_curve(const std::vector<int>& y_true,
                                const std::vector<double>& scores) {
  if (y_true.size() != scores.size())
    throw EvalError("roc_curve: length mismatch");
  std::int64_t pos = 0, neg = 0;
  for (int y : y_true) (y == 1 ? pos : neg) += 1;
  if (pos == 0 || neg == 0)
    throw EvalError("roc: both classes must be present (got " + std::to_string(pos) +
                    " positives, " + std::to_string(neg) + " negatives)");

  std::vector<std::size_t> order(y_true.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0});
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    double s = scores[order[i]];
    // Consume the whole tie group before emitting a point.
    while (i < order.size() && scores[order[i]] == s) {
      (y_true[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                      static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return points;
}

double roc_auc(const std::vector<int>& y_true, const std::vector<double>& scores) {
  auto points = roc_curve(y_true, scores);
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

MetricsReport evaluate_predictions(const std::vector<int>& y_true,
                                   const std::vector<double>& scores,
                                   double threshold) {
  std::vector<int> y_pred(y_true.size());
  for (std::size_t i = 0; i < scores.size(); ++i) y_pred[i] = scores[i] >= threshold ? 1 : 0;

  MetricsReport rep;
  rep.n = y_true.size();
  rep.cm = confusion(y_true, y_pred);
  rep.accuracy = accuracy(rep.cm);
  rep.precision = precision(rep.cm);
  rep.recall = recall(rep.cm);
  rep.f1 = f1(rep.cm);

  // Negative-class view: swap the meaning of positive.
  ConfusionMatrix neg{rep.cm.tn, rep.cm.fn, rep.cm.fp, rep.cm.tp};
  rep.precision_negative = precision(neg);
  rep.recall_negative = recall(neg);
  rep.macro_precision = {(rep.precision.value + rep.precision_negative.value) / 2.0,
                         rep.precision.defined && rep.precision_negative.defined};
  rep.macro_recall = {(rep.recall.value + rep.recall_negative.value) / 2.0,
                      rep.recall.defined && rep.recall_negative.defined};
  Metric f1_neg = f1(neg);
  rep.macro_f1 = {(rep.f1.value + f1_neg.value) / 2.0, rep.f1.defined && f1_neg.defined};

  bool both_classes = (rep.cm.tp + rep.cm.fn) > 0 && (rep.cm.fp + rep.cm.tn) > 0;
  if (both_classes) {
    rep.roc_points = roc_curve(y_true, scores);
    rep.roc_auc = {stancecred::roc_auc(y_true, scores), true};
  } else {
    rep.roc_auc = {0.0, false};
  }
  return rep;
}

namespace {

nlohmann::json metric_json(const Metric& m) {
  return nlohmann::json{{"value", m.value}, {"defined", m.defined}};
}

Metric metric_from_json(const nlohmann::json& j) {
  return Metric{j.at("value").get<double>(), j.at("defined").get<bool>()};
}

/// Minimal standalone SVG bar chart; values are expected in [0, 1].
std::string bar_chart_svg(const std::string& title,
                          const std::vector<std::pair<std::string, double>>& bars) {
  const int width = 480, height = 320;
  const int left = 56, bottom = 48, top = 36, right = 16;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double v = tick * 0.25;
    double y = top + plot_h * (1.0 - v);
    svg << "<text x=\"" << left - 6 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << v
        << "</text>\n";
  }
  if (!bars.empty()) {
    double slot = plot_w / static_cast<double>(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
      double v = std::clamp(bars[i].second, 0.0, 1.0);
      double bw = slot * 0.6;
      double x = left + slot * static_cast<double>(i) + slot * 0.2;
      double h = plot_h * v;
      svg << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bw
          << "\" height=\"" << h << "\" fill=\"#4878a8\"/>\n";
      svg << "<text x=\"" << x + bw / 2 << "\" y=\"" << top + plot_h + 16
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
          << bars[i].first << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_metric_files(const fs::path& dir, const std::string& name,
                        const std::vector<std::pair<std::string, double>>& bars) {
  std::ofstream csv_out(dir / (name + ".csv"));
  if (!csv_out) throw IoError("cannot write " + (dir / (name + ".csv")).string());
  csv_out << "model,value\n";
  for (const auto& [model, value] : bars)
    csv_out << csv::join_row({model, std::to_string(value)});
  std::ofstream svg_out(dir / (name + ".svg"));
  svg_out << bar_chart_svg(name, bars);
}

}  // namespace

void export_figures(const std::vector<MetricsReport>& reports, const std::string& out_dir) {
  if (reports.empty()) throw EvalError("export_figures: no reports given");
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create figure directory: " + out_dir);

  auto collect = [&](auto getter) {
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& r : reports) bars.emplace_back(r.model, getter(r));
    return bars;
  };
  write_metric_files(dir, "train_accuracy",
                     collect([](const MetricsReport& r) { return r.train_accuracy; }));
  write_metric_files(dir, "test_accuracy",
                     collect([](const MetricsReport& r) { return r.accuracy.value; }));
  write_metric_files(dir, "precision",
                     collect([](const MetricsReport& r) { return r.precision.value; }));
  write_metric_files(dir, "recall",
                     collect([](const MetricsReport& r) { return r.recall.value; }));
  write_metric_files(dir, "f1", collect([](const MetricsReport& r) { return r.f1.value; }));
  write_metric_files(dir, "roc_auc",
                     collect([](const MetricsReport& r) { return r.roc_auc.value; }));

  for (const auto& r : reports) {
    if (r.roc_points.empty()) continue;
    std::ofstream out(dir / ("roc_curve_" + r.model + ".csv"));
    if (!out) throw IoError("cannot write ROC curve for " + r.model);
    out << "fpr,tpr\n";
    for (const auto& p : r.roc_points) out << p.fpr << "," << p.tpr << "\n";
  }
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["model"] = model;
  j["backend"] = backend;
  j["split"] = split;
  j["n"] = n;
  j["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
  j["accuracy"] = metric_json(accuracy);
  j["precision"] = metric_json(precision);
  j["recall"] = metric_json(recall);
  j["f1"] = metric_json(f1);
  j["roc_auc"] = metric_json(roc_auc);
  j["precision_negative"] = metric_json(precision_negative);
  j["recall_negative"] = metric_json(recall_negative);
  j["macro_precision"] = metric_json(macro_precision);
  j["macro_recall"] = metric_json(macro_recall);
  j["macro_f1"] = metric_json(macro_f1);
  j["train_accuracy"] = train_accuracy;
  j["val_accuracy"] = val_accuracy;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : roc_points) pts.push_back({p.fpr, p.tpr});
  j["roc_points"] = std::move(pts);
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& json_text) {
  MetricsReport r;
  try {
    nlohmann::json j = nlohmann::json::parse(json_text);
    r.model = j.at("model").get<std::string>();
    r.backend = j.at("backend").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    const auto& c = j.at("confusion");
    r.cm = {c.at("tp").get<std::int64_t>(), c.at("fp").get<std::int64_t>(),
            c.at("fn").get<std::int64_t>(), c.at("tn").get<std::int64_t>()};
    r.accuracy = metric_from_json(j.at("accuracy"));
    r.precision = metric_from_json(j.at("precision"));
    r.recall = metric_from_json(j.at("recall"));
    r.f1 = metric_from_json(j.at("f1"));
    r.roc_auc = metric_from_json(j.at("roc_auc"));
    r.precision_negative = metric_from_json(j.at("precision_negative"));
    r.recall_negative = metric_from_json(j.at("recall_negative"));
    r.macro_precision = metric_from_json(j.at("macro_precision"));
    r.macro_recall = metric_from_json(j.at("macro_recall"));
    r.macro_f1 = metric_from_json(j.at("macro_f1"));
    r.train_accuracy = j.at("train_accuracy").get<double>();
    r.val_accuracy = j.at("val_accuracy").get<double>();
    for (const auto& p : j.at("roc_points")) r.roc_points.push_back({p.at(0), p.at(1)});
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed MetricsReport JSON: " + std::string(e.what()));
  }
  return r;
}

}  // namespace stancecred

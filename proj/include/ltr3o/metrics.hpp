#pragma once

#include <string>
#include <vector>

#include "ltr3o/config.hpp"

namespace ltr3o {

using ConfusionMatrix = std::vector<std::vector<long long>>;  // [truth][predicted]

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth,
                          int n_classes);

// Percent: 100 * trace / total. Throws "empty evaluation" on a zero matrix.
double accuracy(const ConfusionMatrix& m);

// Unweighted mean of per-class F1; a class with precision + recall == 0
// scores 0 (and is flagged in the full report).
double f1_macro(const ConfusionMatrix& m);

// Mean per-class recall.
double uar(const ConfusionMatrix& m);

struct PerClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // precision + recall == 0
};

struct MetricsReport {
  double accuracy = 0.0;  // percent
  double f1_macro = 0.0;  // fraction
  double uf1 = 0.0;       // always equals f1_macro
  double uar = 0.0;       // fraction
  long long total = 0;
  std::vector<PerClassMetrics> per_class;
  ConfusionMatrix confusion;
  std::vector<std::string> labels;
};

MetricsReport metrics_from_confusion(const ConfusionMatrix& m, const LabelSpace& labels);

// Per-fold predictions, class indices into the shared LabelSpace.
struct FoldRecord {
  std::string fold_id;
  std::vector<std::string> sample_ids;
  std::vector<int> predicted;
  std::vector<int> truth;
};

// Pools every per-sample prediction into one confusion matrix (micro
// aggregation). expected_sample_ids must be covered exactly once across
// the folds.
MetricsReport aggregate_loso(const std::vector<FoldRecord>& folds, const LabelSpace& labels,
                             const std::vector<std::string>& expected_sample_ids);

// Deterministic machine-readable document and a human-readable table.
std::string metrics_to_json(const MetricsReport& r);
std::string metrics_table(const MetricsReport& r);

}  // namespace ltr3o

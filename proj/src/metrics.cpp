#include "ltr3o/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ltr3o/common.hpp"

namespace ltr3o {

namespace {

long long matrix_total(const ConfusionMatrix& m) {
  long long total = 0;
  for (const auto& row : m)
    for (long long v : row) {
      if (v < 0) throw ValidationError("confusion matrix has negative entries");
      total += v;
    }
  return total;
}

void check_square(const ConfusionMatrix& m) {
  if (m.empty()) throw ValidationError("empty evaluation");
  for (const auto& row : m)
    if (row.size() != m.size()) throw ValidationError("confusion matrix is not square");
}

struct ClassCounts {
  long long tp = 0, row = 0, col = 0;
};

std::vector<ClassCounts> class_counts(const ConfusionMatrix& m) {
  const std::size_t c = m.size();
  std::vector<ClassCounts> out(c);
  for (std::size_t t = 0; t < c; ++t)
    for (std::size_t p = 0; p < c; ++p) {
      out[t].row += m[t][p];
      out[p].col += m[t][p];
      if (t == p) out[t].tp += m[t][p];
    }
  return out;
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth,
                          int n_classes) {
  if (predicted.size() != truth.size())
    throw ValidationError("confusion: prediction and truth lengths differ");
  if (n_classes < 1) throw ValidationError("confusion: need at least one class");
  ConfusionMatrix m(static_cast<std::size_t>(n_classes),
                    std::vector<long long>(static_cast<std::size_t>(n_classes), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw ValidationError("confusion: label out of range at position " + std::to_string(i));
    ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

double accuracy(const ConfusionMatrix& m) {
  check_square(m);
  const long long total = matrix_total(m);
  if (total == 0) throw ValidationError("empty evaluation");
  long long correct = 0;
  for (std::size_t i = 0; i < m.size(); ++i) correct += m[i][i];
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

double f1_macro(const ConfusionMatrix& m) {
  check_square(m);
  if (matrix_total(m) == 0) throw ValidationError("empty evaluation");
  const auto counts = class_counts(m);
  double sum = 0.0;
  for (const auto& c : counts) {
    const double p = c.col > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.col) : 0.0;
    const double r = c.row > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.row) : 0.0;
    sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return sum / static_cast<double>(counts.size());
}

double uar(const ConfusionMatrix& m) {
  check_square(m);
  if (matrix_total(m) == 0) throw ValidationError("empty evaluation");
  const auto counts = class_counts(m);
  double sum = 0.0;
  for (const auto& c : counts)
    sum += c.row > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.row) : 0.0;
  return sum / static_cast<double>(counts.size());
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& m, const LabelSpace& labels) {
  check_square(m);
  if (static_cast<int>(m.size()) != labels.size())
    throw ValidationError("metrics: matrix size does not match label count");

  MetricsReport r;
  r.confusion = m;
  r.labels = labels.names();
  r.total = matrix_total(m);
  if (r.total == 0) throw ValidationError("empty evaluation");
  r.accuracy = accuracy(m);
  r.f1_macro = f1_macro(m);
  r.uf1 = r.f1_macro;
  r.uar = uar(m);

  const auto counts = class_counts(m);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    PerClassMetrics pc;
    pc.label = labels.name(static_cast<int>(i));
    pc.precision =
        counts[i].col > 0 ? static_cast<double>(counts[i].tp) / static_cast<double>(counts[i].col) : 0.0;
    pc.recall =
        counts[i].row > 0 ? static_cast<double>(counts[i].tp) / static_cast<double>(counts[i].row) : 0.0;
    pc.degenerate = (pc.precision + pc.recall) == 0.0;
    pc.f1 = pc.degenerate ? 0.0 : 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall);
    r.per_class.push_back(std::move(pc));
  }
  return r;
}

MetricsReport aggregate_loso(const std::vector<FoldRecord>& folds, const LabelSpace& labels,
                             const std::vector<std::string>& expected_sample_ids) {
  if (folds.empty()) throw ValidationError("aggregate_loso: no fold records");

  std::map<std::string, int> seen;
  std::vector<int> pred, truth;
  for (const auto& f : folds) {
    if (f.sample_ids.size() != f.predicted.size() || f.sample_ids.size() != f.truth.size())
      throw ValidationError("aggregate_loso: fold '" + f.fold_id + "' has ragged records");
    for (std::size_t i = 0; i < f.sample_ids.size(); ++i) {
      if (++seen[f.sample_ids[i]] > 1)
        throw ValidationError("aggregate_loso: sample '" + f.sample_ids[i] +
                              "' appears in more than one fold");
      pred.push_back(f.predicted[i]);
      truth.push_back(f.truth[i]);
    }
  }
  for (const auto& id : expected_sample_ids)
    if (!seen.count(id))
      throw ValidationError("aggregate_loso: sample '" + id + "' missing from fold records");
  if (seen.size() != expected_sample_ids.size())
    throw ValidationError("aggregate_loso: fold records contain unexpected samples");

  return metrics_from_confusion(confusion(pred, truth, labels.size()), labels);
}

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["uf1"] = r.uf1;
  j["f1_macro"] = r.f1_macro;
  j["uar"] = r.uar;
  j["total"] = r.total;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& pc : r.per_class)
    per.push_back({{"label", pc.label},
                   {"precision", pc.precision},
                   {"recall", pc.recall},
                   {"f1", pc.f1},
                   {"degenerate", pc.degenerate}});
  j["per_class"] = per;
  j["labels"] = r.labels;
  j["confusion"] = r.confusion;
  return j.dump(2) + "\n";
}

std::string metrics_table(const MetricsReport& r) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "accuracy %.2f%%   uf1 %.4f   uar %.4f   (n=%lld)\n", r.accuracy,
                r.uf1, r.uar, r.total);
  out << buf;
  out << "class                 precision   recall       f1\n";
  for (const auto& pc : r.per_class) {
    std::snprintf(buf, sizeof buf, "%-20s %9.4f %8.4f %8.4f%s\n", pc.label.c_str(), pc.precision,
                  pc.recall, pc.f1, pc.degenerate ? "  (no predictions or truth)" : "");
    out << buf;
  }
  out << "confusion (rows = truth):\n";
  for (std::size_t t = 0; t < r.confusion.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%-20s", r.labels[t].c_str());
    out << buf;
    for (long long v : r.confusion[t]) {
      std::snprintf(buf, sizeof buf, " %6lld", v);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace ltr3o

#include "ltr3o/protocol.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ltr3o/common.hpp"

namespace ltr3o {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

constexpr const char* kTargets[3] = {"Positive", "Negative", "Surprise"};

}  // namespace

std::vector<SampleKey> sample_keys(const std::vector<ManifestRow>& rows) {
  std::vector<SampleKey> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.sample_id, r.subject_id, r.dataset_id, r.label});
  return out;
}

std::vector<SampleKey> sample_keys(const std::vector<MESample>& samples) {
  std::vector<SampleKey> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.sample_id, s.subject_id, s.dataset_id, s.label});
  return out;
}

SplitPlan make_loso_splits(const std::vector<SampleKey>& samples) {
  if (samples.empty()) throw ValidationError("make_loso_splits: empty dataset");
  std::set<std::string> subjects;
  for (const auto& s : samples) {
    if (s.subject_id.empty()) throw ValidationError("make_loso_splits: sample '" + s.sample_id +
                                                    "' has no subject_id");
    subjects.insert(s.subject_id);
  }
  if (subjects.size() < 2)
    throw ValidationError("make_loso_splits: need at least 2 subjects, got " +
                          std::to_string(subjects.size()));

  SplitPlan plan;
  for (const auto& test : subjects) {
    Fold fold;
    fold.fold_id = test;
    fold.test_subject = test;
    for (const auto& other : subjects)
      if (other != test) fold.train_subjects.push_back(other);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

void CdeMapping::set(const std::string& dataset_id, const std::string& label,
                     const std::string& target_or_drop) {
  if (dataset_id.empty() || label.empty())
    throw ValidationError("cde mapping: empty dataset or class name");
  if (target_or_drop == "DROP") {
    map_[{dataset_id, label}] = "";
    return;
  }
  if (std::find(std::begin(kTargets), std::end(kTargets), target_or_drop) == std::end(kTargets))
    throw ValidationError("cde mapping: target '" + target_or_drop +
                          "' must be Positive, Negative, Surprise, or DROP");
  map_[{dataset_id, label}] = target_or_drop;
}

bool CdeMapping::covers(const std::string& dataset_id, const std::string& label) const {
  return map_.count({dataset_id, label}) > 0;
}

std::optional<std::string> CdeMapping::target(const std::string& dataset_id,
                                              const std::string& label) const {
  auto it = map_.find({dataset_id, label});
  if (it == map_.end())
    throw ValidationError("cde mapping does not cover class '" + label + "' of dataset '" +
                          dataset_id + "'");
  if (it->second.empty()) return std::nullopt;
  return it->second;
}

CdeMapping CdeMapping::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open cde mapping: " + path.string());
  CdeMapping m;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    const std::size_t dot = t.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ValidationError("cde mapping line " + std::to_string(line_no) +
                            ": expected dataset.class=Target");
    const std::string ds = trim(t.substr(0, dot));
    const std::string cls = trim(t.substr(dot + 1, eq - dot - 1));
    const std::string target = trim(t.substr(eq + 1));
    m.set(ds, cls, target);
  }
  return m;
}

std::string CdeMapping::to_text() const {
  std::ostringstream out;
  for (const auto& [key, target] : map_)
    out << key.first << "." << key.second << "=" << (target.empty() ? "DROP" : target) << "\n";
  return out.str();
}

CdeMapping CdeMapping::megc_default() {
  CdeMapping m;
  m.set("smic", "negative", "Negative");
  m.set("smic", "positive", "Positive");
  m.set("smic", "surprise", "Surprise");

  m.set("casme2", "happy", "Positive");
  m.set("casme2", "disgust", "Negative");
  m.set("casme2", "repressed", "Negative");
  m.set("casme2", "surprise", "Surprise");
  m.set("casme2", "others", "DROP");

  m.set("samm", "happy", "Positive");
  m.set("samm", "angry", "Negative");
  m.set("samm", "contempt", "Negative");
  m.set("samm", "disgust", "Negative");
  m.set("samm", "fear", "Negative");
  m.set("samm", "sadness", "Negative");
  m.set("samm", "surprise", "Surprise");
  m.set("samm", "others", "DROP");
  return m;
}

CdeResult make_cde(const std::vector<SampleKey>& samples, const CdeMapping& mapping) {
  if (samples.empty()) throw ValidationError("make_cde: empty input");
  CdeResult out;
  for (const auto& s : samples) {
    const auto target = mapping.target(s.dataset_id, s.label);
    if (!target) continue;
    SampleKey k;
    k.sample_id = s.dataset_id + ":" + s.sample_id;
    k.subject_id = s.dataset_id + ":" + s.subject_id;
    k.dataset_id = s.dataset_id;
    k.label = *target;
    out.samples.push_back(std::move(k));
  }
  if (out.samples.empty()) throw ValidationError("make_cde: mapping dropped every sample");
  out.plan = make_loso_splits(out.samples);
  return out;
}

}  // namespace ltr3o

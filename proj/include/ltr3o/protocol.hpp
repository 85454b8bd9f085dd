#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ltr3o/ingest.hpp"
#include "ltr3o/sample.hpp"

namespace ltr3o {

// Identity view of one sample, enough for split planning.
struct SampleKey {
  std::string sample_id;
  std::string subject_id;
  std::string dataset_id;
  std::string label;
};

std::vector<SampleKey> sample_keys(const std::vector<ManifestRow>& rows);
std::vector<SampleKey> sample_keys(const std::vector<MESample>& samples);

struct Fold {
  std::string fold_id;  // equals the held-out subject
  std::string test_subject;
  std::vector<std::string> train_subjects;
};

struct SplitPlan {
  std::vector<Fold> folds;  // sorted by test subject
};

// One fold per distinct subject; deterministic (subjects sorted).
SplitPlan make_loso_splits(const std::vector<SampleKey>& samples);

// Per-dataset class relabeling onto {Positive, Negative, Surprise}; a class
// may instead be dropped. Every class seen in the data must be covered.
class CdeMapping {
 public:
  void set(const std::string& dataset_id, const std::string& label,
           const std::string& target_or_drop);
  // nullopt = drop; throws ValidationError when the pair is not covered.
  std::optional<std::string> target(const std::string& dataset_id,
                                    const std::string& label) const;
  bool covers(const std::string& dataset_id, const std::string& label) const;

  // key=value lines, `dataset.class=Target|DROP`, # comments allowed
  static CdeMapping load(const std::filesystem::path& path);
  std::string to_text() const;

  // The composite-challenge convention: SMIC identity; CASME II and SAMM
  // merge all negative-affect classes into Negative, happiness into
  // Positive, keep Surprise, drop the unassignable rest.
  static CdeMapping megc_default();

 private:
  std::map<std::pair<std::string, std::string>, std::string> map_;  // "" = drop
};

struct CdeResult {
  std::vector<SampleKey> samples;  // relabeled; subject/sample ids dataset-prefixed
  SplitPlan plan;
};

// Relabel + filter the union of the given rows, prefix subject and sample
// ids with their dataset, and plan LOSO over the composite.
CdeResult make_cde(const std::vector<SampleKey>& samples, const CdeMapping& mapping);

}  // namespace ltr3o

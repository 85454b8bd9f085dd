#pragma once

#include <string>
#include <vector>

#include "ltr3o/config.hpp"
#include "ltr3o/model.hpp"
#include "ltr3o/pipeline.hpp"

namespace ltr3o {

struct EpochStats {
  int epoch = 0;
  double total = 0.0;     // mean ce + lambda * ro over the epoch's samples
  double ce = 0.0;
  double ro = 0.0;
  double mean_gap = 0.0;  // mean alpha_h - alpha_l
  double lr = 0.0;        // rate used by the epoch's last step
};

struct TrainStats {
  std::vector<EpochStats> epochs;
  double wall_seconds = 0.0;
};

// Adam with a cosine-annealed rate over all steps, shuffled batches, and
// per-sample geometric augmentation shared across a sample's K inputs.
// flow_inputs controls the flip rule (negate horizontal displacement).
// run_tag keys the shuffle and augmentation streams, so distinct folds see
// distinct data orders under one seed. Deterministic for fixed
// (model params, data, config, run_tag), independent of jobs.
TrainStats train_model(Ltr3oModel& model, const std::vector<PreparedSample>& train,
                       const LabelSpace& labels, const Config& cfg, bool flow_inputs,
                       const std::string& run_tag, int jobs);

// Argmax class per sample, no augmentation.
std::vector<int> predict(const Ltr3oModel& model, const std::vector<PreparedSample>& samples,
                         int jobs);

// Per-sample score gap alpha_h - alpha_l under the current parameters, no
// augmentation. Requires K >= 2 inputs per sample.
std::vector<double> sample_gaps(const Ltr3oModel& model,
                                const std::vector<PreparedSample>& samples, double gamma,
                                int jobs);

}  // namespace ltr3o

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltr3o/image.hpp"

namespace ltr3o {

// One expression clip: the frame sequence plus onset/apex/offset annotations.
// Frame indices are positions within `frames`, not source file numbers.
struct MESample {
  std::string sample_id;
  std::string subject_id;
  std::string dataset_id;
  std::vector<Image> frames;
  int onset_idx = 0;
  std::optional<int> apex_idx;
  int offset_idx = 0;
  std::string label;
};

// Throws ValidationError unless 0 <= onset <= offset < frames.size(), the
// apex (when present) lies in [onset, offset], all frames share one shape,
// and the id/label fields are non-empty.
void validate_sample(const MESample& s);

}  // namespace ltr3o

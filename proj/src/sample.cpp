#include "ltr3o/sample.hpp"

#include "ltr3o/common.hpp"

namespace ltr3o {

void validate_sample(const MESample& s) {
  const std::string where = "sample '" + s.sample_id + "': ";
  if (s.sample_id.empty()) throw ValidationError("sample with empty sample_id");
  if (s.subject_id.empty()) throw ValidationError(where + "empty subject_id");
  if (s.dataset_id.empty()) throw ValidationError(where + "empty dataset_id");
  if (s.label.empty()) throw ValidationError(where + "empty label");
  if (s.frames.empty()) throw ValidationError(where + "no frames");

  const int n = static_cast<int>(s.frames.size());
  if (s.onset_idx < 0 || s.onset_idx > s.offset_idx || s.offset_idx >= n)
    throw ValidationError(where + "need 0 <= onset <= offset < " + std::to_string(n) +
                          ", got onset=" + std::to_string(s.onset_idx) +
                          " offset=" + std::to_string(s.offset_idx));
  if (s.apex_idx && (*s.apex_idx < s.onset_idx || *s.apex_idx > s.offset_idx))
    throw ValidationError(where + "apex " + std::to_string(*s.apex_idx) +
                          " outside [onset, offset]");

  const Image& first = s.frames.front();
  if (first.h <= 0 || first.w <= 0 || first.c <= 0)
    throw ValidationError(where + "frame 0 is empty");
  for (int i = 1; i < n; ++i)
    if (!s.frames[i].same_shape(first))
      throw ValidationError(where + "frame " + std::to_string(i) +
                            " shape differs from frame 0");
}

}  // namespace ltr3o

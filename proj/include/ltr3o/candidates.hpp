#pragma once

#include <utility>
#include <vector>

#include "ltr3o/rng.hpp"
#include "ltr3o/sample.hpp"

namespace ltr3o {

// Inclusive (start, end) frame-index ranges: contiguous, in order, covering
// the annotated span exactly, lengths differing by at most one frame.
using SegmentBounds = std::vector<std::pair<int, int>>;

// One onset/occurring/offset triple drawn from segment j of a clip.
struct ThreeOCandidate {
  std::string sample_id;
  int j = 0;  // 1-based candidate index
  Image onset_frame;
  Image occurring_frame;
  Image offset_frame;
  int occurring_idx = 0;
  std::pair<int, int> segment{0, 0};
};

// Partition [onset_idx, offset_idx] into k contiguous segments. When the span
// is not divisible by k the earliest (span mod k) segments get the extra
// frame. Throws ValidationError when the span holds fewer than k frames.
SegmentBounds segment_bounds(int onset_idx, int offset_idx, int k);

// Draw one frame index uniformly from each segment, in segment order.
std::vector<int> sample_occurring(const SegmentBounds& bounds, RngStream& rng);

// Assemble the k candidates of one clip. All candidates share the clip's
// onset and offset frames; occurring frames are drawn per segment.
std::vector<ThreeOCandidate> build_candidates(const MESample& sample, int k, RngStream& rng);

}  // namespace ltr3o

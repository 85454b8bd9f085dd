#include "ltr3o/candidates.hpp"

#include <string>

#include "ltr3o/common.hpp"

namespace ltr3o {

SegmentBounds segment_bounds(int onset_idx, int offset_idx, int k) {
  if (k < 1) throw ValidationError("segment_bounds: k must be >= 1");
  const int span = offset_idx - onset_idx + 1;
  if (onset_idx < 0 || span < 1)
    throw ValidationError("segment_bounds: need 0 <= onset <= offset");
  if (span < k)
    throw ValidationError("segment_bounds: span of " + std::to_string(span) +
                          " frames cannot form " + std::to_string(k) + " segments");

  SegmentBounds bounds;
  bounds.reserve(k);
  const int base = span / k;
  const int extra = span % k;
  int start = onset_idx;
  for (int j = 0; j < k; ++j) {
    const int len = base + (j < extra ? 1 : 0);
    bounds.emplace_back(start, start + len - 1);
    start += len;
  }
  return bounds;
}

std::vector<int> sample_occurring(const SegmentBounds& bounds, RngStream& rng) {
  std::vector<int> idx;
  idx.reserve(bounds.size());
  for (const auto& [start, end] : bounds) idx.push_back(rng.uniform_int(start, end));
  return idx;
}

std::vector<ThreeOCandidate> build_candidates(const MESample& sample, int k, RngStream& rng) {
  validate_sample(sample);
  const SegmentBounds bounds = segment_bounds(sample.onset_idx, sample.offset_idx, k);
  const std::vector<int> occ = sample_occurring(bounds, rng);

  std::vector<ThreeOCandidate> out;
  out.reserve(k);
  for (int j = 0; j < k; ++j) {
    ThreeOCandidate c;
    c.sample_id = sample.sample_id;
    c.j = j + 1;
    c.onset_frame = sample.frames[sample.onset_idx];
    c.occurring_frame = sample.frames[occ[j]];
    c.offset_frame = sample.frames[sample.offset_idx];
    c.occurring_idx = occ[j];
    c.segment = bounds[j];
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace ltr3o

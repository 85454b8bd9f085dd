#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>

#include "ltr3o/candidates.hpp"
#include "ltr3o/image.hpp"

namespace ltr3o {

// H x W x 2 displacement field: channel 0 = u (horizontal, +x rightward),
// channel 1 = v (vertical, +y downward), in pixels. A displacement d at x
// means the second frame satisfies b(x + d) = a(x).
using FlowField = Image;

// H x W x 3 rendering of two averaged flow fields: channels are
// (mean u, mean v, magnitude) / flow_scale, the first two clipped to [-1, 1]
// and the magnitude to [0, 1]. The magnitude is taken before clipping, so
// channel 2 equals the norm of channels 0-1 wherever nothing clipped.
using FusedFlowImage = Image;

struct FlowOptions {
  int levels = 0;  // pyramid depth; 0 picks from the image size (halve while >= 32, at most 4)
  int iterations = 3;
  int window_radius = 3;
  double presmooth_sigma = 0.9;
};

// Coarse-to-fine dense estimator: Gaussian presmooth, box-downsampled
// pyramid, per-level iterative local least-squares on warped differences
// with damped 2x2 solves, 3x3 median cleanup per iteration.
FlowField estimate_flow(const Image& frame_a, const Image& frame_b, const FlowOptions& opts = {});

// Average the two fields per pixel and render (mean u, mean v, magnitude),
// each divided by flow_scale and clipped as described on FusedFlowImage.
FusedFlowImage fuse_flows(const FlowField& flow_oo, const FlowField& flow_of, double flow_scale);

// Estimator interface so externally computed flow can replace the built-in.
using FlowEstimator = std::function<FlowField(const Image&, const Image&)>;

FlowEstimator default_estimator(const FlowOptions& opts = {});

// Estimate onset->occurring and occurring->offset, then fuse.
FusedFlowImage build_input(const ThreeOCandidate& cand, const FlowEstimator& estimator,
                           double flow_scale);

// On-disk cache of rendered inputs, one file per (sample, candidate).
// Record layout: magic "LTR3O\0", u16 version = 1, u32 h, w, c,
// u32 occurring_idx, then h*w*c little-endian float32 in row-major order.
struct FlowCacheRecord {
  Image image;
  int occurring_idx = 0;
};

std::filesystem::path flow_cache_entry_path(const std::filesystem::path& dir,
                                            const std::string& sample_id, int j);
void flow_cache_write(const std::filesystem::path& dir, const std::string& sample_id, int j,
                      const Image& image, int occurring_idx);
FlowCacheRecord flow_cache_read(const std::filesystem::path& dir, const std::string& sample_id,
                                int j);

// Import container for flow computed elsewhere: one file per candidate
// holding two consecutive c == 2 records (onset->occurring, then
// occurring->offset) in the same layout as the cache.
struct FlowImportRecord {
  FlowField flow_oo;
  FlowField flow_of;
  int occurring_idx = 0;
};

std::filesystem::path flow_import_entry_path(const std::filesystem::path& dir,
                                             const std::string& sample_id, int j);
void flow_import_write(const std::filesystem::path& dir, const std::string& sample_id, int j,
                       const FlowField& flow_oo, const FlowField& flow_of, int occurring_idx);
FlowImportRecord flow_import_read(const std::filesystem::path& dir, const std::string& sample_id,
                                  int j);

}  // namespace ltr3o

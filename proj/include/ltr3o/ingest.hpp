#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ltr3o/config.hpp"
#include "ltr3o/flow.hpp"
#include "ltr3o/sample.hpp"

namespace ltr3o {

// One manifest line. Relative frames_dir entries are resolved against the
// manifest's own directory at load time.
struct ManifestRow {
  std::string sample_id;
  std::string subject_id;
  std::string dataset_id;
  std::filesystem::path frames_dir;
  int onset = 0;
  std::optional<int> apex;
  int offset = 0;
  std::string label;
};

// Parse and validate a manifest CSV. Header must be exactly
// `sample_id,subject_id,dataset_id,frames_dir,onset,apex,offset,label`;
// a blank apex field means no apex annotation. Errors carry the row number.
std::vector<ManifestRow> load_manifest(const std::filesystem::path& path);

// Same, additionally requiring every label to belong to `labels`.
std::vector<ManifestRow> load_manifest(const std::filesystem::path& path,
                                       const LabelSpace& labels);

// Distinct labels over the rows, sorted.
LabelSpace manifest_label_space(const std::vector<ManifestRow>& rows);

struct DatasetSummary {
  std::string dataset_id;
  int samples = 0;
  int subjects = 0;
  int classes = 0;
};

std::vector<DatasetSummary> manifest_summary(const std::vector<ManifestRow>& rows);

// Read the row's frames (files in frames_dir, sorted by name), resize each
// to image_size x image_size, and attach the annotations.
MESample load_sample(const ManifestRow& row, int image_size);

// Synthetic dataset shape. Each clip is a static per-subject base pattern
// deformed by a class-specific localized displacement whose amplitude ramps
// 0 -> peak -> 0 over [onset, apex, offset]. clips_per_subject must divide
// evenly across n_classes so every class gets equal counts.
struct SynthSpec {
  int n_subjects = 8;
  int clips_per_subject = 9;
  int frames_per_clip = 18;
  int image_size = 32;
  int n_classes = 3;
  double motion_amplitude_px = 1.5;
  double noise_sigma = 0.05;

  void validate() const;
};

// Deformation parameters of one generated clip; enough to evaluate the
// exact displacement of any pixel between any two frames.
struct ClipTruth {
  double center_y = 0.0, center_x = 0.0;  // deformation center, pixels
  double dir_y = 0.0, dir_x = 0.0;        // unit displacement direction
  double sigma = 1.0;                     // Gaussian window radius, pixels
  std::vector<double> amplitude;          // per-frame peak displacement, pixels
};

struct SynthDataset {
  std::vector<MESample> samples;
  std::vector<ClipTruth> truths;  // parallel to samples
  LabelSpace labels;
};

// Deterministic in (spec, seed): regeneration is bit-identical.
SynthDataset generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

// Exact flow between two frames of a generated clip, anchored at frame_a
// coordinates: a material point at x in frame_a sits at x + flow(x) in
// frame_b.
FlowField truth_flow(const ClipTruth& t, int h, int w, int frame_a, int frame_b);

// Write frames (8-bit PGM) plus manifest.csv under dir; returns the
// manifest path. Layout: dir/frames/<sample_id>/f####.pgm.
std::filesystem::path write_synth_dataset(const std::filesystem::path& dir,
                                          const SynthDataset& ds);

}  // namespace ltr3o

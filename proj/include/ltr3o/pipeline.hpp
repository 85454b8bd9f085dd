#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ltr3o/config.hpp"
#include "ltr3o/flow.hpp"
#include "ltr3o/ingest.hpp"

namespace ltr3o {

// Input construction variants. k3o is the full pipeline (K candidates,
// fused onset->occurring and occurring->offset flows). The rest are
// single-candidate baselines: raw frame images (k1o, apex), one flow field
// rendered alone (k2o, onset_apex), or the apex standing in for the
// occurring frame (onset_apex_offset).
enum class InputMode { k3o, k1o, k2o, apex, onset_apex, onset_apex_offset };

InputMode parse_input_mode(const std::string& name);
std::string input_mode_name(InputMode mode);
bool input_mode_single_candidate(InputMode mode);
// True when the cached inputs are flow renderings (flip must negate u).
bool input_mode_flow_inputs(InputMode mode);

// One training unit: the candidate renderings of a clip plus identity.
struct PreparedSample {
  std::string sample_id;
  std::string subject_id;
  std::string dataset_id;
  std::string label;
  std::vector<Image> inputs;          // k renderings, c == 3
  std::vector<int> occurring_indices;  // provenance, parallel to inputs
};

// Build every cache entry for the given samples. Occurring frames are drawn
// from a per-sample stream keyed by sample_id, so worker order cannot change
// the result. flow_source "reference" runs the built-in estimator;
// "import" reads externally computed field pairs from import_dir instead
// (their recorded occurring indices are taken as-is).
struct PrepareOptions {
  int k = 8;
  std::uint64_t seed = 0;
  double flow_scale = 8.0;
  InputMode mode = InputMode::k3o;
  std::string flow_source = "reference";  // or "import"
  std::filesystem::path import_dir;
  int jobs = 1;
};

void prepare_cache(const std::vector<MESample>& samples, const PrepareOptions& opts,
                   const std::filesystem::path& cache_dir);

// Read the cache entries for the rows back into memory; throws listing
// every missing (sample, candidate) pair.
std::vector<PreparedSample> load_prepared(const std::vector<ManifestRow>& rows,
                                          const std::filesystem::path& cache_dir, int k);

// Effective candidate count per sample for a mode (1 for the baselines).
int effective_k(InputMode mode, int k);

}  // namespace ltr3o

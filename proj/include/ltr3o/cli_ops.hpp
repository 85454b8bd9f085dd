#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ltr3o/config.hpp"
#include "ltr3o/ingest.hpp"
#include "ltr3o/metrics.hpp"
#include "ltr3o/pipeline.hpp"

// Subcommand bodies. Each writes its artifacts under an output directory and
// returns the interesting result for in-process callers; errors surface as
// ValidationError / RuntimeError, which the executable maps to exit codes.

namespace ltr3o::ops {

struct SynthOptions {
  SynthSpec spec;
  int k = 8;  // candidate count the dataset must support
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

// Returns the manifest path.
std::filesystem::path run_synth(const SynthOptions& o);

struct PrepareCliOptions {
  std::filesystem::path manifest;
  Config config;
  InputMode mode = InputMode::k3o;
  std::string flow_source = "reference";  // or "import"
  std::filesystem::path import_dir;
  std::filesystem::path out;  // cache directory
  int jobs = 1;
};

// Returns the number of cache records written.
int run_prepare(const PrepareCliOptions& o);

struct TrainCliOptions {
  std::filesystem::path manifest;
  std::filesystem::path cache;
  Config config;
  InputMode mode = InputMode::k3o;
  std::string split = "all";  // "all" or a file of training sample ids
  std::filesystem::path out;
  int jobs = 1;
};

struct TrainOutcome {
  double train_accuracy = 0.0;  // percent
  double mean_gap = 0.0;        // over training samples, post-training
  double frac_gap_ge_delta = 0.0;
  std::filesystem::path checkpoint;
  std::filesystem::path run_record;
};

TrainOutcome run_train(const TrainCliOptions& o);

struct LosoCliOptions {
  std::filesystem::path manifest;
  std::filesystem::path cache;
  Config config;
  InputMode mode = InputMode::k3o;
  std::filesystem::path out;
  int jobs = 1;
};

MetricsReport run_loso(const LosoCliOptions& o);

struct CdeCliOptions {
  std::vector<std::filesystem::path> manifests;
  std::vector<std::filesystem::path> caches;  // parallel to manifests; empty = plan only
  std::filesystem::path mapping;              // empty = built-in composite mapping
  Config config;
  std::filesystem::path out;
  int jobs = 1;
};

struct CdeOutcome {
  int n_subjects = 0;
  int n_samples = 0;
  std::optional<MetricsReport> report;  // absent for plan-only runs
};

CdeOutcome run_cde(const CdeCliOptions& o);

struct SweepCliOptions {
  std::string param;   // k | delta | gamma | lambda | resample
  std::string values;  // "a..b:step" or comma list; ignored for resample
  int times = 5;       // resample repetition count
  std::filesystem::path manifest;
  std::filesystem::path cache;  // optional shared cache for delta/gamma/lambda
  Config config;
  InputMode mode = InputMode::k3o;
  std::filesystem::path out;
  int jobs = 1;
};

struct SweepRow {
  std::string value;
  MetricsReport report;
  std::filesystem::path dir;
};

std::vector<SweepRow> run_sweep(const SweepCliOptions& o);

struct StructuresCliOptions {
  std::vector<std::string> modes;  // default {"1o", "2o", "3o"}
  std::filesystem::path manifest;
  Config config;
  std::filesystem::path out;
  int jobs = 1;
};

struct StructureRow {
  std::string mode;
  int k = 1;
  MetricsReport report;
};

std::vector<StructureRow> run_structures(const StructuresCliOptions& o);

// Pretty-print a saved metrics document.
void run_report(const std::filesystem::path& metrics_json);

// "4..16:2" or "0.4,0.5" -> expanded numeric list.
std::vector<double> parse_value_list(const std::string& text);

}  // namespace ltr3o::ops

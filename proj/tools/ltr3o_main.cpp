#include <cstdint>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ltr3o/cli_ops.hpp"
#include "ltr3o/common.hpp"

using namespace ltr3o;

namespace {

int default_jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ranked 3O-candidate micro-expression recognition pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out;
  std::uint64_t seed = 0;
  int jobs = default_jobs();
  app.add_option("--config", config_path, "key=value config file");
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  auto config = [&] {
    Config cfg = config_path.empty() ? Config{} : load_config_file(config_path);
    if (seed_opt->count()) cfg.seed = seed;
    return cfg;
  };
  auto out_dir = [&] {
    if (out.empty()) throw ValidationError("--out is required");
    return std::filesystem::path(out);
  };

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with a manifest");
  SynthSpec spec;
  int synth_k = 8;
  synth->add_option("--subjects", spec.n_subjects, "distinct subjects");
  synth->add_option("--clips-per-subject", spec.clips_per_subject, "clips per subject");
  synth->add_option("--frames-per-clip", spec.frames_per_clip, "frames per clip");
  synth->add_option("--image-size", spec.image_size, "square frame side");
  synth->add_option("--classes", spec.n_classes, "expression classes");
  synth->add_option("--amplitude", spec.motion_amplitude_px, "peak deformation, pixels");
  synth->add_option("--noise", spec.noise_sigma, "static texture noise level");
  synth->add_option("--k", synth_k, "candidate count the clips must support");
  synth->callback([&] {
    ops::SynthOptions o;
    o.spec = spec;
    o.k = synth_k;
    o.seed = seed_opt->count() ? seed : 0;
    o.out = out_dir();
    ops::run_synth(o);
  });

  // prepare
  auto* prepare = app.add_subcommand("prepare", "draw candidates and build the flow cache");
  std::string prep_manifest, prep_flow = "reference", prep_import, prep_mode = "3o";
  int prep_k = 0;
  prepare->add_option("--manifest", prep_manifest, "dataset manifest CSV")->required();
  prepare->add_option("--k", prep_k, "candidates per clip (overrides the config)");
  prepare->add_option("--flow", prep_flow, "flow source: reference or import");
  prepare->add_option("--import-dir", prep_import, "directory of imported flow pairs");
  prepare->add_option("--mode", prep_mode, "input structure (3o, 1o, 2o, apex, ...)");
  prepare->callback([&] {
    ops::PrepareCliOptions o;
    o.manifest = prep_manifest;
    o.config = config();
    if (prep_k > 0) o.config.k = prep_k;
    o.mode = parse_input_mode(prep_mode);
    o.flow_source = prep_flow;
    o.import_dir = prep_import;
    o.out = out_dir();
    o.jobs = jobs;
    ops::run_prepare(o);
  });

  // train
  auto* train = app.add_subcommand("train", "train one model on a prepared cache");
  std::string train_manifest, train_cache, train_split = "all", train_mode = "3o";
  train->add_option("--manifest", train_manifest, "dataset manifest CSV")->required();
  train->add_option("--cache", train_cache, "prepared flow cache")->required();
  train->add_option("--split", train_split, "'all' or a file of training sample ids");
  train->add_option("--mode", train_mode, "input structure");
  train->callback([&] {
    ops::TrainCliOptions o;
    o.manifest = train_manifest;
    o.cache = train_cache;
    o.config = config();
    o.mode = parse_input_mode(train_mode);
    o.split = train_split;
    o.out = out_dir();
    o.jobs = jobs;
    ops::run_train(o);
  });

  // loso
  auto* loso = app.add_subcommand("loso", "leave-one-subject-out evaluation");
  std::string loso_manifest, loso_cache, loso_mode = "3o";
  loso->add_option("--manifest", loso_manifest, "dataset manifest CSV")->required();
  loso->add_option("--cache", loso_cache, "prepared flow cache")->required();
  loso->add_option("--mode", loso_mode, "input structure");
  loso->callback([&] {
    ops::LosoCliOptions o;
    o.manifest = loso_manifest;
    o.cache = loso_cache;
    o.config = config();
    o.mode = parse_input_mode(loso_mode);
    o.out = out_dir();
    o.jobs = jobs;
    ops::run_loso(o);
  });

  // cde
  auto* cde = app.add_subcommand("cde", "composite evaluation across datasets");
  std::vector<std::string> cde_manifests, cde_caches;
  std::string cde_mapping;
  cde->add_option("--manifest", cde_manifests, "manifest CSV (repeat per dataset)")
      ->required()
      ->take_all();
  cde->add_option("--cache", cde_caches, "flow cache (repeat, paired with --manifest)")
      ->take_all();
  cde->add_option("--mapping", cde_mapping, "class mapping file (default: composite convention)");
  cde->callback([&] {
    ops::CdeCliOptions o;
    for (const auto& m : cde_manifests) o.manifests.emplace_back(m);
    for (const auto& c : cde_caches) o.caches.emplace_back(c);
    o.mapping = cde_mapping;
    o.config = config();
    o.out = out_dir();
    o.jobs = jobs;
    ops::run_cde(o);
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "grid sweep of one knob, one report per value");
  std::string sweep_param, sweep_values, sweep_manifest, sweep_cache, sweep_mode = "3o";
  int sweep_times = 5;
  sweep->add_option("--param", sweep_param, "k, delta, gamma, lambda, or resample")->required();
  sweep->add_option("--values", sweep_values, "a..b:step or comma list");
  sweep->add_option("--times", sweep_times, "resample repetitions");
  sweep->add_option("--manifest", sweep_manifest, "dataset manifest CSV")->required();
  sweep->add_option("--cache", sweep_cache, "shared cache for delta/gamma/lambda sweeps");
  sweep->add_option("--mode", sweep_mode, "input structure");
  sweep->callback([&] {
    ops::SweepCliOptions o;
    o.param = sweep_param;
    o.values = sweep_values;
    o.times = sweep_times;
    o.manifest = sweep_manifest;
    o.cache = sweep_cache;
    o.config = config();
    o.mode = parse_input_mode(sweep_mode);
    o.out = out_dir();
    o.jobs = jobs;
    ops::run_sweep(o);
  });

  // structures
  auto* structures =
      app.add_subcommand("structures", "compare input structures (1o/2o/3o/apex variants)");
  std::vector<std::string> struct_modes;
  std::string struct_manifest;
  structures->add_option("--mode", struct_modes, "structures to compare (default 1o 2o 3o)")
      ->take_all();
  structures->add_option("--manifest", struct_manifest, "dataset manifest CSV")->required();
  structures->callback([&] {
    ops::StructuresCliOptions o;
    o.modes = struct_modes;
    o.manifest = struct_manifest;
    o.config = config();
    o.out = out_dir();
    o.jobs = jobs;
    ops::run_structures(o);
  });

  // report
  auto* report = app.add_subcommand("report", "pretty-print a saved metrics document");
  std::string report_path;
  report->add_option("metrics", report_path, "metrics.json path")->required();
  report->callback([&] { ops::run_report(report_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad usage is a validation error
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

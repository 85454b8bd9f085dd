#include "ltr3o/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "ltr3o/candidates.hpp"
#include "ltr3o/common.hpp"
#include "ltr3o/rng.hpp"

namespace ltr3o {

InputMode parse_input_mode(const std::string& name) {
  if (name == "3o") return InputMode::k3o;
  if (name == "1o") return InputMode::k1o;
  if (name == "2o") return InputMode::k2o;
  if (name == "apex") return InputMode::apex;
  if (name == "onset-apex") return InputMode::onset_apex;
  if (name == "onset-apex-offset") return InputMode::onset_apex_offset;
  throw ValidationError("unknown input mode '" + name +
                        "' (expected 3o, 1o, 2o, apex, onset-apex, onset-apex-offset)");
}

std::string input_mode_name(InputMode mode) {
  switch (mode) {
    case InputMode::k3o: return "3o";
    case InputMode::k1o: return "1o";
    case InputMode::k2o: return "2o";
    case InputMode::apex: return "apex";
    case InputMode::onset_apex: return "onset-apex";
    case InputMode::onset_apex_offset: return "onset-apex-offset";
  }
  throw RuntimeError("bad input mode");
}

bool input_mode_single_candidate(InputMode mode) { return mode != InputMode::k3o; }

bool input_mode_flow_inputs(InputMode mode) {
  return mode != InputMode::k1o && mode != InputMode::apex;
}

int effective_k(InputMode mode, int k) { return input_mode_single_candidate(mode) ? 1 : k; }

namespace {

void require_apex(const MESample& s) {
  if (!s.apex_idx)
    throw ValidationError("sample '" + s.sample_id +
                          "': apex mode without apex annotations in the manifest");
}

// Renders the cache entries of one sample; throws propagate to the caller.
void prepare_sample(const MESample& s, const PrepareOptions& opts,
                    const std::filesystem::path& cache_dir, const FlowEstimator& est) {
  const bool import = opts.flow_source == "import";

  if (opts.mode == InputMode::k3o) {
    RngStream rng = make_rng(opts.seed, "occ:" + s.sample_id);
    const auto cands = build_candidates(s, opts.k, rng);
    for (const auto& c : cands) {
      FusedFlowImage fused;
      int occurring_idx = c.occurring_idx;
      if (import) {
        const FlowImportRecord rec = flow_import_read(opts.import_dir, s.sample_id, c.j);
        fused = fuse_flows(rec.flow_oo, rec.flow_of, opts.flow_scale);
        occurring_idx = rec.occurring_idx;
      } else {
        fused = build_input(c, est, opts.flow_scale);
      }
      flow_cache_write(cache_dir, s.sample_id, c.j, fused, occurring_idx);
    }
    return;
  }

  // single-candidate baselines
  Image input;
  int occurring_idx = 0;
  switch (opts.mode) {
    case InputMode::k1o: {
      RngStream rng = make_rng(opts.seed, "occ:" + s.sample_id);
      const auto cands = build_candidates(s, 1, rng);
      input = with_channels(cands[0].occurring_frame, 3);
      occurring_idx = cands[0].occurring_idx;
      break;
    }
    case InputMode::k2o: {
      RngStream rng = make_rng(opts.seed, "occ:" + s.sample_id);
      const auto cands = build_candidates(s, 1, rng);
      const FlowField f = est(cands[0].onset_frame, cands[0].occurring_frame);
      input = fuse_flows(f, f, opts.flow_scale);
      occurring_idx = cands[0].occurring_idx;
      break;
    }
    case InputMode::apex: {
      require_apex(s);
      input = with_channels(s.frames[static_cast<std::size_t>(*s.apex_idx)], 3);
      occurring_idx = *s.apex_idx;
      break;
    }
    case InputMode::onset_apex: {
      require_apex(s);
      const FlowField f = est(s.frames[static_cast<std::size_t>(s.onset_idx)],
                              s.frames[static_cast<std::size_t>(*s.apex_idx)]);
      input = fuse_flows(f, f, opts.flow_scale);
      occurring_idx = *s.apex_idx;
      break;
    }
    case InputMode::onset_apex_offset: {
      require_apex(s);
      const Image& apex = s.frames[static_cast<std::size_t>(*s.apex_idx)];
      const FlowField a = est(s.frames[static_cast<std::size_t>(s.onset_idx)], apex);
      const FlowField b = est(apex, s.frames[static_cast<std::size_t>(s.offset_idx)]);
      input = fuse_flows(a, b, opts.flow_scale);
      occurring_idx = *s.apex_idx;
      break;
    }
    default: throw RuntimeError("bad input mode");
  }
  flow_cache_write(cache_dir, s.sample_id, 1, input, occurring_idx);
}

}  // namespace

void prepare_cache(const std::vector<MESample>& samples, const PrepareOptions& opts,
                   const std::filesystem::path& cache_dir) {
  if (opts.k < 1) throw ValidationError("prepare: k must be >= 1");
  if (opts.flow_source != "reference" && opts.flow_source != "import")
    throw ValidationError("prepare: flow source must be 'reference' or 'import'");
  if (opts.flow_source == "import" && opts.mode != InputMode::k3o)
    throw ValidationError("prepare: import flow is only supported for 3o inputs");
  std::filesystem::create_directories(cache_dir);

  const FlowEstimator est = default_estimator();
  const int n = static_cast<int>(samples.size());
  std::vector<std::string> errors(static_cast<std::size_t>(n));

#pragma omp parallel for schedule(dynamic) num_threads(opts.jobs)
  for (int i = 0; i < n; ++i) {
    try {
      prepare_sample(samples[static_cast<std::size_t>(i)], opts, cache_dir, est);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  std::string all;
  for (const auto& e : errors)
    if (!e.empty()) all += (all.empty() ? "" : "\n") + e;
  if (!all.empty()) throw ValidationError(all);
}

std::vector<PreparedSample> load_prepared(const std::vector<ManifestRow>& rows,
                                          const std::filesystem::path& cache_dir, int k) {
  std::vector<PreparedSample> out;
  out.reserve(rows.size());
  std::ostringstream missing;
  int n_missing = 0;
  for (const auto& r : rows) {
    PreparedSample p;
    p.sample_id = r.sample_id;
    p.subject_id = r.subject_id;
    p.dataset_id = r.dataset_id;
    p.label = r.label;
    for (int j = 1; j <= k; ++j) {
      const auto path = flow_cache_entry_path(cache_dir, r.sample_id, j);
      if (!std::filesystem::exists(path)) {
        if (n_missing < 20) missing << " (" << r.sample_id << ", " << j << ")";
        ++n_missing;
        continue;
      }
      FlowCacheRecord rec = flow_cache_read(cache_dir, r.sample_id, j);
      p.inputs.push_back(std::move(rec.image));
      p.occurring_indices.push_back(rec.occurring_idx);
    }
    out.push_back(std::move(p));
  }
  if (n_missing > 0)
    throw ValidationError("flow cache misses " + std::to_string(n_missing) + " entr" +
                          (n_missing == 1 ? "y" : "ies") + ":" + missing.str() +
                          (n_missing > 20 ? " ..." : ""));
  return out;
}

}  // namespace ltr3o

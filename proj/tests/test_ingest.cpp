#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>

#include "ltr3o/common.hpp"
#include "ltr3o/ingest.hpp"
#include "support/db_fixtures.hpp"
#include "support/tmpdir.hpp"

using namespace ltr3o;

namespace {

std::filesystem::path write_manifest(const std::filesystem::path& dir, const std::string& body) {
  const auto path = dir / "manifest.csv";
  std::ofstream f(path);
  f << body;
  return path;
}

constexpr const char* kHeader =
    "sample_id,subject_id,dataset_id,frames_dir,onset,apex,offset,label\n";

double diff_energy(const Image& a, const Image& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.px[i]) - b.px[i];
    e += d * d;
  }
  return e;
}

}  // namespace

TEST_CASE("bundled benchmark manifests load with the expected shape") {
  fixtures::TempDir tmp("ingest_db");
  fixtures::write_db_manifests(tmp.path());

  const auto casme2 = load_manifest(tmp / "casme2.csv");
  REQUIRE(casme2.size() == 247);
  auto summary = manifest_summary(casme2);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].dataset_id == "casme2");
  CHECK(summary[0].samples == 247);
  CHECK(summary[0].subjects == 26);
  CHECK(summary[0].classes == 5);
  const LabelSpace casme2_labels = manifest_label_space(casme2);
  CHECK(casme2_labels.size() == 5);
  CHECK(casme2_labels.contains("repressed"));

  const auto smic = load_manifest(tmp / "smic.csv");
  REQUIRE(smic.size() == 164);
  summary = manifest_summary(smic);
  CHECK(summary[0].samples == 164);
  CHECK(summary[0].subjects == 16);
  CHECK(summary[0].classes == 3);
  for (const auto& r : smic) CHECK_FALSE(r.apex.has_value());  // no apex annotations

  const auto samm = load_manifest(tmp / "samm.csv");
  REQUIRE(samm.size() == 159);
  summary = manifest_summary(samm);
  CHECK(summary[0].samples == 159);
  CHECK(summary[0].subjects == 32);
  CHECK(summary[0].classes == 8);

  // Every casme2/samm row carries an apex inside its window.
  for (const auto& r : casme2) {
    REQUIRE(r.apex.has_value());
    CHECK(*r.apex >= r.onset);
    CHECK(*r.apex <= r.offset);
  }

  // Relative frame directories are anchored at the manifest's directory.
  CHECK(casme2[0].frames_dir == tmp / "frames" / casme2[0].sample_id);
}

TEST_CASE("header-only manifest yields zero rows") {
  fixtures::TempDir tmp("ingest_empty");
  const auto path = write_manifest(tmp.path(), kHeader);
  CHECK(load_manifest(path).empty());
}

TEST_CASE("malformed manifests are rejected with the offending row number") {
  fixtures::TempDir tmp("ingest_bad");

  auto message_of = [](const std::filesystem::path& p) {
    try {
      load_manifest(p);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };

  CHECK_THROWS_AS(load_manifest(tmp / "nope.csv"), ValidationError);
  CHECK(write_manifest(tmp.path(), "") == tmp / "manifest.csv");
  CHECK(message_of(tmp / "manifest.csv").find("manifest is empty") != std::string::npos);

  write_manifest(tmp.path(), "sample,subject\n");
  CHECK(message_of(tmp / "manifest.csv").find("header must be") != std::string::npos);

  write_manifest(tmp.path(), std::string(kHeader) + "a,s1,d,frames/a,0,2,5\n");
  CHECK(message_of(tmp / "manifest.csv").find("row 2: expected 8 fields, got 7") !=
        std::string::npos);

  write_manifest(tmp.path(), std::string(kHeader) +
                                 "a,s1,d,frames/a,0,2,5,happy\n"
                                 "a,s2,d,frames/b,0,2,5,happy\n");
  CHECK(message_of(tmp / "manifest.csv").find("row 3: duplicate sample_id 'a'") !=
        std::string::npos);

  write_manifest(tmp.path(), std::string(kHeader) + "a,s1,d,frames/a,zero,2,5,happy\n");
  CHECK(message_of(tmp / "manifest.csv").find("row 2: onset 'zero' is not a nonnegative integer") !=
        std::string::npos);

  write_manifest(tmp.path(), std::string(kHeader) + "a,s1,d,frames/a,-1,2,5,happy\n");
  CHECK(message_of(tmp / "manifest.csv").find("row 2: onset '-1'") != std::string::npos);

  write_manifest(tmp.path(), std::string(kHeader) + "a,s1,d,frames/a,3,1,5,happy\n");
  CHECK(message_of(tmp / "manifest.csv").find("row 2: apex outside [onset, offset]") !=
        std::string::npos);

  write_manifest(tmp.path(), std::string(kHeader) + "a,s1,d,frames/a,6,,5,happy\n");
  CHECK(message_of(tmp / "manifest.csv").find("row 2: onset 6 > offset 5") != std::string::npos);

  write_manifest(tmp.path(), std::string(kHeader) + "a,s1,d,frames/a,0,2,5,\n");
  CHECK(message_of(tmp / "manifest.csv").find("row 2: empty id or label") != std::string::npos);
}

TEST_CASE("label-restricted loading names the stray label and its row") {
  fixtures::TempDir tmp("ingest_labels");
  const auto path = write_manifest(tmp.path(), std::string(kHeader) +
                                                   "a,s1,d,frames/a,0,2,5,happy\n"
                                                   "b,s1,d,frames/b,0,2,5,puzzled\n");
  const LabelSpace allowed(std::vector<std::string>{"happy", "sad"});
  CHECK(load_manifest(path, LabelSpace(std::vector<std::string>{"happy", "puzzled"})).size() == 2);
  try {
    load_manifest(path, allowed);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("'puzzled'") != std::string::npos);
  }
}

TEST_CASE("synthetic generation is deterministic and class-balanced") {
  const SynthSpec spec;  // 8 subjects x 9 clips, 3 classes
  const SynthDataset a = generate_synthetic(spec, 7);
  const SynthDataset b = generate_synthetic(spec, 7);
  const SynthDataset c = generate_synthetic(spec, 8);

  REQUIRE(a.samples.size() == 72);
  REQUIRE(a.truths.size() == 72);
  CHECK(a.labels.size() == 3);

  std::map<std::string, int> per_class;
  std::set<std::string> subjects;
  for (const auto& s : a.samples) {
    ++per_class[s.label];
    subjects.insert(s.subject_id);
    validate_sample(s);
  }
  CHECK(subjects.size() == 8);
  for (const auto& [label, count] : per_class) CHECK(count == 24);

  // Same seed: bit-identical; different seed: some pixel differs.
  bool any_diff = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    REQUIRE(a.samples[i].frames.size() == b.samples[i].frames.size());
    for (std::size_t f = 0; f < a.samples[i].frames.size(); ++f) {
      CHECK(a.samples[i].frames[f].px == b.samples[i].frames[f].px);
      if (a.samples[i].frames[f].px != c.samples[i].frames[f].px) any_diff = true;
    }
    CHECK(a.truths[i].amplitude == b.truths[i].amplitude);
  }
  CHECK(any_diff);
}

TEST_CASE("synthetic motion ramps up to the apex and vanishes at the ends") {
  SynthSpec spec;
  spec.n_subjects = 2;
  spec.clips_per_subject = 3;
  const SynthDataset ds = generate_synthetic(spec, 11);

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const MESample& s = ds.samples[i];
    const ClipTruth& t = ds.truths[i];
    REQUIRE(s.apex_idx.has_value());
    CHECK(t.amplitude[static_cast<std::size_t>(s.onset_idx)] == 0.0);
    CHECK(t.amplitude[static_cast<std::size_t>(s.offset_idx)] == 0.0);
    CHECK(t.amplitude[static_cast<std::size_t>(*s.apex_idx)] > 0.0);

    // Zero-amplitude frames reproduce the rest frame exactly.
    CHECK(s.frames[static_cast<std::size_t>(s.onset_idx)].px ==
          s.frames[static_cast<std::size_t>(s.offset_idx)].px);

    // Deviation from the rest frame peaks at the apex and is zero at the ends.
    const Image& rest = s.frames[static_cast<std::size_t>(s.onset_idx)];
    double max_e = -1.0;
    int argmax = -1;
    for (int f = 0; f < static_cast<int>(s.frames.size()); ++f) {
      const double e = diff_energy(s.frames[static_cast<std::size_t>(f)], rest);
      if (e > max_e) {
        max_e = e;
        argmax = f;
      }
    }
    CHECK(argmax == *s.apex_idx);
    CHECK(diff_energy(s.frames.front(), rest) == doctest::Approx(0.0));
    CHECK(diff_energy(s.frames.back(), rest) == doctest::Approx(0.0));
  }
}

TEST_CASE("written synthetic clips reload through the manifest path") {
  fixtures::TempDir tmp("ingest_synth");
  SynthSpec spec;
  spec.n_subjects = 2;
  spec.clips_per_subject = 3;
  spec.frames_per_clip = 10;
  const SynthDataset ds = generate_synthetic(spec, 3);
  const auto manifest = write_synth_dataset(tmp.path(), ds);
  CHECK(manifest == tmp / "manifest.csv");

  const auto rows = load_manifest(manifest, ds.labels);
  REQUIRE(rows.size() == ds.samples.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const MESample loaded = load_sample(rows[i], spec.image_size);
    const MESample& orig = ds.samples[i];
    CHECK(loaded.sample_id == orig.sample_id);
    CHECK(loaded.subject_id == orig.subject_id);
    CHECK(loaded.onset_idx == orig.onset_idx);
    CHECK(loaded.apex_idx == orig.apex_idx);
    CHECK(loaded.offset_idx == orig.offset_idx);
    CHECK(loaded.label == orig.label);
    REQUIRE(loaded.frames.size() == orig.frames.size());
    float max_err = 0.0f;
    for (std::size_t f = 0; f < orig.frames.size(); ++f) {
      REQUIRE(loaded.frames[f].same_shape(orig.frames[f]));
      for (std::size_t p = 0; p < orig.frames[f].size(); ++p)
        max_err = std::max(max_err, std::abs(loaded.frames[f].px[p] - orig.frames[f].px[p]));
    }
    CHECK(max_err <= 0.5f / 255.0f + 1e-6f);  // 8-bit quantization only
  }

  // Downscaling on load changes the frame shape but keeps annotations.
  const MESample small = load_sample(rows[0], 16);
  CHECK(small.frames[0].h == 16);
  CHECK(small.frames[0].w == 16);
  validate_sample(small);
}

TEST_CASE("load_sample rejects impossible rows") {
  fixtures::TempDir tmp("ingest_load_err");
  SynthSpec spec;
  spec.n_subjects = 2;
  spec.clips_per_subject = 3;
  spec.frames_per_clip = 8;
  const SynthDataset ds = generate_synthetic(spec, 5);
  write_synth_dataset(tmp.path(), ds);
  auto rows = load_manifest(tmp / "manifest.csv");
  REQUIRE(!rows.empty());

  ManifestRow bad_dir = rows[0];
  bad_dir.frames_dir = tmp / "frames" / "missing";
  CHECK_THROWS_AS(load_sample(bad_dir, 32), ValidationError);

  ManifestRow past_end = rows[0];
  past_end.offset = spec.frames_per_clip;  // one past the last frame on disk
  past_end.apex = past_end.offset;
  try {
    load_sample(past_end, 32);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("offset out of range") != std::string::npos);
  }

  CHECK_THROWS_AS(load_sample(rows[0], 4), ValidationError);  // image_size too small
}

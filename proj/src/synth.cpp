#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ltr3o/common.hpp"
#include "ltr3o/ingest.hpp"
#include "ltr3o/rng.hpp"

namespace ltr3o {

namespace {

double gauss2(double dy, double dx, double sigma) {
  return std::exp(-0.5 * (dy * dy + dx * dx) / (sigma * sigma));
}

float sample_base(const Image& g, double fy, double fx) {
  fy = std::min(std::max(fy, 0.0), static_cast<double>(g.h - 1));
  fx = std::min(std::max(fx, 0.0), static_cast<double>(g.w - 1));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x0 = static_cast<int>(std::floor(fx));
  const int y1 = std::min(y0 + 1, g.h - 1);
  const int x1 = std::min(x0 + 1, g.w - 1);
  const double wy = fy - y0, wx = fx - x0;
  const double top = (1.0 - wx) * g.at(y0, x0, 0) + wx * g.at(y0, x1, 0);
  const double bot = (1.0 - wx) * g.at(y1, x0, 0) + wx * g.at(y1, x1, 0);
  return static_cast<float>((1.0 - wy) * top + wy * bot);
}

// Face-ish layout so the clips look plausible and, more importantly, carry
// gradient structure everywhere the deformation can land.
Image make_base(int size, double noise_sigma, RngStream& rng) {
  const double cy = 0.5 * size, cx = 0.5 * size;
  Image base = Image::zeros(size, size, 1);

  // low-frequency shading, different per subject
  const double phase = rng.next_real() * 6.28318530717958648;
  const double angle = rng.next_real() * 6.28318530717958648;
  const double freq = (0.6 + 0.8 * rng.next_real()) * 6.28318530717958648 / size;
  const double ka = std::cos(angle) * freq, kb = std::sin(angle) * freq;

  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double v = 0.45 + 0.08 * std::sin(ka * x + kb * y + phase);
      const double ey = (y - cy) / (0.42 * size), ex = (x - cx) / (0.36 * size);
      if (ey * ey + ex * ex < 1.0) v += 0.18;
      v -= 0.25 * gauss2(y - 0.38 * size, x - 0.35 * size, 0.045 * size);
      v -= 0.25 * gauss2(y - 0.38 * size, x - 0.65 * size, 0.045 * size);
      v -= 0.20 * gauss2((y - 0.72 * size) / 1.0, (x - 0.50 * size) / 3.0, 0.030 * size);
      base.at(y, x, 0) = static_cast<float>(v);
    }

  if (noise_sigma > 0.0) {
    Image noise = Image::zeros(size, size, 1);
    for (float& v : noise.px) v = static_cast<float>(rng.normal(0.0, 1.0));
    // light blur to band-limit, then rescale to the requested sigma
    Image blurred = Image::zeros(size, size, 1);
    const double k[3] = {0.25, 0.5, 0.25};
    Image tmp = Image::zeros(size, size, 1);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double acc = 0.0;
        for (int i = -1; i <= 1; ++i) acc += k[i + 1] * noise.at(y, std::clamp(x + i, 0, size - 1), 0);
        tmp.at(y, x, 0) = static_cast<float>(acc);
      }
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double acc = 0.0;
        for (int i = -1; i <= 1; ++i) acc += k[i + 1] * tmp.at(std::clamp(y + i, 0, size - 1), x, 0);
        blurred.at(y, x, 0) = static_cast<float>(acc);
      }
    double mean = 0.0, var = 0.0;
    for (float v : blurred.px) mean += v;
    mean /= static_cast<double>(blurred.px.size());
    for (float v : blurred.px) var += (v - mean) * (v - mean);
    var /= static_cast<double>(blurred.px.size());
    const double scale = noise_sigma / std::sqrt(std::max(var, 1e-12));
    for (std::size_t i = 0; i < base.px.size(); ++i)
      base.px[i] = static_cast<float>(base.px[i] + scale * (blurred.px[i] - mean));
  }

  for (float& v : base.px) v = std::min(std::max(v, 0.02f), 0.98f);
  return base;
}

// Rest position q of the material point seen at p: solves q + U(q) = p by
// fixed-point iteration (the displacement field is a contraction here).
void invert_displacement(const ClipTruth& t, double amp, double py, double px, double& qy,
                         double& qx) {
  qy = py;
  qx = px;
  for (int it = 0; it < 12; ++it) {
    const double g = amp * gauss2(qy - t.center_y, qx - t.center_x, t.sigma);
    qy = py - g * t.dir_y;
    qx = px - g * t.dir_x;
  }
}

Image render_frame(const Image& base, const ClipTruth& t, int frame) {
  const double amp = t.amplitude[static_cast<std::size_t>(frame)];
  if (amp == 0.0) return base;
  Image out = Image::zeros(base.h, base.w, 1);
  for (int y = 0; y < base.h; ++y)
    for (int x = 0; x < base.w; ++x) {
      double qy, qx;
      invert_displacement(t, amp, y, x, qy, qx);
      out.at(y, x, 0) = sample_base(base, qy, qx);
    }
  return out;
}

std::string class_name(int k, int n_classes) {
  if (n_classes == 3) {
    static const char* kThree[3] = {"negative", "positive", "surprise"};
    return kThree[k];
  }
  return "class" + std::to_string(k);
}

}  // namespace

void SynthSpec::validate() const {
  if (n_subjects < 2) throw ValidationError("synth: n_subjects must be >= 2");
  if (n_classes < 2) throw ValidationError("synth: n_classes must be >= 2");
  if (clips_per_subject < n_classes || clips_per_subject % n_classes != 0)
    throw ValidationError("synth: clips_per_subject must be a positive multiple of n_classes");
  if (frames_per_clip < 5) throw ValidationError("synth: frames_per_clip must be >= 5");
  if (image_size < 16) throw ValidationError("synth: image_size must be >= 16");
  if (!(motion_amplitude_px > 0.0)) throw ValidationError("synth: motion_amplitude_px must be > 0");
  if (noise_sigma < 0.0) throw ValidationError("synth: noise_sigma must be >= 0");
}

SynthDataset generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();

  SynthDataset ds;
  std::vector<std::string> class_names;
  for (int k = 0; k < spec.n_classes; ++k) class_names.push_back(class_name(k, spec.n_classes));
  ds.labels = LabelSpace(class_names);

  const int size = spec.image_size;
  for (int s = 0; s < spec.n_subjects; ++s) {
    char sid[16];
    std::snprintf(sid, sizeof sid, "s%02d", s + 1);
    RngStream base_rng = make_rng(seed, std::string("synth:base:") + sid);
    const Image base = make_base(size, spec.noise_sigma, base_rng);

    for (int cpos = 0; cpos < spec.clips_per_subject; ++cpos) {
      const int cls = cpos % spec.n_classes;
      const int rep = cpos / spec.n_classes;
      const std::string sample_id =
          std::string(sid) + "_" + class_names[static_cast<std::size_t>(cls)] + "_" +
          std::to_string(rep);
      RngStream rng = make_rng(seed, "synth:clip:" + sample_id);

      // class sets region and push direction; the clip jitters both a little
      const double theta = 6.28318530717958648 * cls / spec.n_classes + 0.3;
      ClipTruth t;
      t.center_y = 0.5 * size + 0.22 * size * std::sin(theta) + rng.normal(0.0, 0.015 * size);
      t.center_x = 0.5 * size + 0.22 * size * std::cos(theta) + rng.normal(0.0, 0.015 * size);
      const double dir_angle = theta + 1.57079632679489662 + rng.normal(0.0, 0.08);
      t.dir_y = std::sin(dir_angle);
      t.dir_x = std::cos(dir_angle);
      t.sigma = 0.12 * size;

      const int n = spec.frames_per_clip;
      const int onset = 1, offset = n - 2;
      const int span = offset - onset;
      const int apex = rng.uniform_int(onset + span / 3, onset + (2 * span) / 3);
      const double peak = spec.motion_amplitude_px * (0.8 + 0.4 * rng.next_real());

      t.amplitude.assign(static_cast<std::size_t>(n), 0.0);
      for (int f = onset; f <= offset; ++f) {
        double a;
        if (f <= apex)
          a = peak * static_cast<double>(f - onset) / std::max(1, apex - onset);
        else
          a = peak * static_cast<double>(offset - f) / std::max(1, offset - apex);
        t.amplitude[static_cast<std::size_t>(f)] = a;
      }

      MESample sample;
      sample.sample_id = sample_id;
      sample.subject_id = sid;
      sample.dataset_id = "synth";
      sample.onset_idx = onset;
      sample.apex_idx = apex;
      sample.offset_idx = offset;
      sample.label = class_names[static_cast<std::size_t>(cls)];
      sample.frames.reserve(static_cast<std::size_t>(n));
      for (int f = 0; f < n; ++f) sample.frames.push_back(render_frame(base, t, f));
      validate_sample(sample);

      ds.samples.push_back(std::move(sample));
      ds.truths.push_back(std::move(t));
    }
  }
  return ds;
}

FlowField truth_flow(const ClipTruth& t, int h, int w, int frame_a, int frame_b) {
  const int n = static_cast<int>(t.amplitude.size());
  if (frame_a < 0 || frame_a >= n || frame_b < 0 || frame_b >= n)
    throw ValidationError("truth_flow: frame index out of range");
  const double amp_a = t.amplitude[static_cast<std::size_t>(frame_a)];
  const double amp_b = t.amplitude[static_cast<std::size_t>(frame_b)];

  FlowField out = Image::zeros(h, w, 2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double qy, qx;
      invert_displacement(t, amp_a, y, x, qy, qx);
      const double g = gauss2(qy - t.center_y, qx - t.center_x, t.sigma);
      out.at(y, x, 0) = static_cast<float>((amp_b - amp_a) * g * t.dir_x);
      out.at(y, x, 1) = static_cast<float>((amp_b - amp_a) * g * t.dir_y);
    }
  return out;
}

std::filesystem::path write_synth_dataset(const std::filesystem::path& dir,
                                          const SynthDataset& ds) {
  std::filesystem::create_directories(dir / "frames");
  for (const auto& s : ds.samples) {
    const auto sdir = dir / "frames" / s.sample_id;
    std::filesystem::create_directories(sdir);
    for (std::size_t f = 0; f < s.frames.size(); ++f) {
      char name[16];
      std::snprintf(name, sizeof name, "f%04d.pgm", static_cast<int>(f));
      write_image8(sdir / name, s.frames[f]);
    }
  }

  const auto manifest = dir / "manifest.csv";
  std::ofstream out(manifest);
  if (!out) throw RuntimeError("cannot write manifest: " + manifest.string());
  out << "sample_id,subject_id,dataset_id,frames_dir,onset,apex,offset,label\n";
  for (const auto& s : ds.samples) {
    out << s.sample_id << "," << s.subject_id << "," << s.dataset_id << ","
        << (std::filesystem::path("frames") / s.sample_id).generic_string() << "," << s.onset_idx
        << "," << (s.apex_idx ? std::to_string(*s.apex_idx) : std::string()) << "," << s.offset_idx
        << "," << s.label << "\n";
  }
  if (!out) throw RuntimeError("short write: " + manifest.string());
  return manifest;
}

}  // namespace ltr3o

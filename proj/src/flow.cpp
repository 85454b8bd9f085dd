#include "ltr3o/flow.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ltr3o/common.hpp"

namespace ltr3o {

namespace {

Image to_gray(const Image& im) { return im.c == 1 ? im : with_channels(im, 1); }

Image gaussian_blur(const Image& g, double sigma) {
  if (sigma <= 0.0) return g;
  const int r = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;

  Image tmp = Image::zeros(g.h, g.w, 1);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * g.at(y, std::clamp(x + i, 0, g.w - 1), 0);
      tmp.at(y, x, 0) = static_cast<float>(acc);
    }
  Image out = Image::zeros(g.h, g.w, 1);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(std::clamp(y + i, 0, g.h - 1), x, 0);
      out.at(y, x, 0) = static_cast<float>(acc);
    }
  return out;
}

Image downsample2(const Image& g) {
  const int oh = g.h / 2, ow = g.w / 2;
  Image out = Image::zeros(oh, ow, 1);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      out.at(y, x, 0) = 0.25f * (g.at(2 * y, 2 * x, 0) + g.at(2 * y, 2 * x + 1, 0) +
                                 g.at(2 * y + 1, 2 * x, 0) + g.at(2 * y + 1, 2 * x + 1, 0));
  return out;
}

float sample_clamped(const Image& g, double fy, double fx) {
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

// Median over the 3x3 neighborhood clipped to the image; even-sized border
// windows take the mean of the two central order statistics so the filter
// commutes exactly with sign flips.
Image median3x3(const Image& g) {
  Image out = Image::zeros(g.h, g.w, 1);
  float vals[9];
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      int n = 0;
      for (int yy = std::max(0, y - 1); yy <= std::min(g.h - 1, y + 1); ++yy)
        for (int xx = std::max(0, x - 1); xx <= std::min(g.w - 1, x + 1); ++xx)
          vals[n++] = g.at(yy, xx, 0);
      std::sort(vals, vals + n);
      out.at(y, x, 0) = (n % 2 == 1) ? vals[n / 2] : 0.5f * (vals[n / 2 - 1] + vals[n / 2]);
    }
  return out;
}

// Summed-area table with one-cell zero border; box() returns the sum over
// the inclusive rectangle [y0, y1] x [x0, x1].
struct Sat {
  int h = 0, w = 0;
  std::vector<double> s;
  void build(const std::vector<double>& grid, int hh, int ww) {
    h = hh;
    w = ww;
    s.assign(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        s[(y + 1) * static_cast<std::size_t>(w + 1) + (x + 1)] =
            grid[y * static_cast<std::size_t>(w) + x] +
            s[y * static_cast<std::size_t>(w + 1) + (x + 1)] +
            s[(y + 1) * static_cast<std::size_t>(w + 1) + x] -
            s[y * static_cast<std::size_t>(w + 1) + x];
  }
  double box(int y0, int y1, int x0, int x1) const {
    const std::size_t W = w + 1;
    return s[(y1 + 1) * W + (x1 + 1)] - s[y0 * W + (x1 + 1)] - s[(y1 + 1) * W + x0] +
           s[y0 * W + x0];
  }
};

void refine_level(const Image& A, const Image& B, Image& u, Image& v, const FlowOptions& opts) {
  const int h = A.h, w = A.w;
  const int r = opts.window_radius;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> gxx(n), gxy(n), gyy(n), gxt(n), gyt(n);
  Sat sxx, sxy, syy, sxt, syt;

  for (int it = 0; it < opts.iterations; ++it) {
    Image bw = Image::zeros(h, w, 1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        bw.at(y, x, 0) = sample_clamped(B, y + v.at(y, x, 0), x + u.at(y, x, 0));

    Image avg = Image::zeros(h, w, 1);
    for (std::size_t i = 0; i < n; ++i) avg.px[i] = 0.5f * (A.px[i] + bw.px[i]);

    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double ix = 0.5 * (avg.at(y, std::min(x + 1, w - 1), 0) -
                                 avg.at(y, std::max(x - 1, 0), 0));
        const double iy = 0.5 * (avg.at(std::min(y + 1, h - 1), x, 0) -
                                 avg.at(std::max(y - 1, 0), x, 0));
        const double idt = static_cast<double>(bw.at(y, x, 0)) - A.at(y, x, 0);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        gxx[i] = ix * ix;
        gxy[i] = ix * iy;
        gyy[i] = iy * iy;
        gxt[i] = ix * idt;
        gyt[i] = iy * idt;
      }
    sxx.build(gxx, h, w);
    sxy.build(gxy, h, w);
    syy.build(gyy, h, w);
    sxt.build(gxt, h, w);
    syt.build(gyt, h, w);

    Image un = Image::zeros(h, w, 1), vn = Image::zeros(h, w, 1);
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
      for (int x = 0; x < w; ++x) {
        const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
        const double a11 = sxx.box(y0, y1, x0, x1);
        const double a12 = sxy.box(y0, y1, x0, x1);
        const double a22 = syy.box(y0, y1, x0, x1);
        const double b1 = -sxt.box(y0, y1, x0, x1);
        const double b2 = -syt.box(y0, y1, x0, x1);
        const double lam = 1e-6 + 1e-3 * (a11 + a22);
        const double det = (a11 + lam) * (a22 + lam) - a12 * a12;
        double du = (b1 * (a22 + lam) - b2 * a12) / det;
        double dv = (b2 * (a11 + lam) - b1 * a12) / det;
        du = std::clamp(du, -2.0, 2.0);
        dv = std::clamp(dv, -2.0, 2.0);
        un.at(y, x, 0) = static_cast<float>(
            std::clamp(u.at(y, x, 0) + du, -static_cast<double>(w), static_cast<double>(w)));
        vn.at(y, x, 0) = static_cast<float>(
            std::clamp(v.at(y, x, 0) + dv, -static_cast<double>(h), static_cast<double>(h)));
      }
    }
    u = median3x3(un);
    v = median3x3(vn);
  }
}

}  // namespace

FlowField estimate_flow(const Image& frame_a, const Image& frame_b, const FlowOptions& opts) {
  if (!frame_a.same_shape(frame_b)) throw ValidationError("estimate_flow: frame shapes differ");
  if (frame_a.h < 8 || frame_a.w < 8)
    throw ValidationError("estimate_flow: frames must be at least 8x8");
  if (opts.iterations < 1 || opts.window_radius < 1)
    throw ValidationError("estimate_flow: bad options");

  Image ga = gaussian_blur(to_gray(frame_a), opts.presmooth_sigma);
  Image gb = gaussian_blur(to_gray(frame_b), opts.presmooth_sigma);

  int levels = opts.levels;
  if (levels <= 0) {
    levels = 1;
    for (int d = std::min(ga.h, ga.w); d >= 32 && levels < 4; d /= 2) ++levels;
  }
  std::vector<Image> pa{ga}, pb{gb};
  for (int l = 1; l < levels; ++l) {
    if (pa.back().h < 16 || pa.back().w < 16) break;
    pa.push_back(downsample2(gaussian_blur(pa.back(), 0.8)));
    pb.push_back(downsample2(gaussian_blur(pb.back(), 0.8)));
  }
  levels = static_cast<int>(pa.size());

  Image u = Image::zeros(pa.back().h, pa.back().w, 1);
  Image v = Image::zeros(pa.back().h, pa.back().w, 1);
  for (int l = levels - 1; l >= 0; --l) {
    if (l < levels - 1) {
      const double ry = static_cast<double>(pa[l].h) / u.h;
      const double rx = static_cast<double>(pa[l].w) / u.w;
      u = resize_bilinear(u, pa[l].h, pa[l].w);
      v = resize_bilinear(v, pa[l].h, pa[l].w);
      for (float& val : u.px) val = static_cast<float>(val * rx);
      for (float& val : v.px) val = static_cast<float>(val * ry);
    }
    refine_level(pa[l], pb[l], u, v, opts);
  }

  FlowField out = Image::zeros(frame_a.h, frame_a.w, 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      out.at(y, x, 0) = u.at(y, x, 0);
      out.at(y, x, 1) = v.at(y, x, 0);
    }
  return out;
}

FlowEstimator default_estimator(const FlowOptions& opts) {
  return [opts](const Image& a, const Image& b) { return estimate_flow(a, b, opts); };
}

FusedFlowImage fuse_flows(const FlowField& flow_oo, const FlowField& flow_of, double flow_scale) {
  if (!flow_oo.same_shape(flow_of)) throw ValidationError("fuse_flows: field shapes differ");
  if (flow_oo.c != 2) throw ValidationError("fuse_flows: fields must have 2 channels");
  if (!(flow_scale > 0.0)) throw ValidationError("fuse_flows: flow_scale must be positive");

  FusedFlowImage out = Image::zeros(flow_oo.h, flow_oo.w, 3);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      const double mu = 0.5 * (static_cast<double>(flow_oo.at(y, x, 0)) + flow_of.at(y, x, 0));
      const double mv = 0.5 * (static_cast<double>(flow_oo.at(y, x, 1)) + flow_of.at(y, x, 1));
      const double mag = std::sqrt(mu * mu + mv * mv);
      out.at(y, x, 0) = static_cast<float>(std::clamp(mu / flow_scale, -1.0, 1.0));
      out.at(y, x, 1) = static_cast<float>(std::clamp(mv / flow_scale, -1.0, 1.0));
      out.at(y, x, 2) = static_cast<float>(std::clamp(mag / flow_scale, 0.0, 1.0));
    }
  return out;
}

FusedFlowImage build_input(const ThreeOCandidate& cand, const FlowEstimator& estimator,
                           double flow_scale) {
  if (!estimator) throw ValidationError("build_input: null estimator");
  const FlowField oo = estimator(cand.onset_frame, cand.occurring_frame);
  const FlowField of = estimator(cand.occurring_frame, cand.offset_frame);
  return fuse_flows(oo, of, flow_scale);
}

}  // namespace ltr3o

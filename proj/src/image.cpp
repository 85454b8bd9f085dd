#include "ltr3o/image.hpp"

#include <algorithm>
#include <cmath>

#include "ltr3o/common.hpp"

namespace ltr3o {

Image resize_bilinear(const Image& im, int oh, int ow) {
  if (im.h <= 0 || im.w <= 0 || im.c <= 0) throw ValidationError("resize_bilinear: empty image");
  if (oh <= 0 || ow <= 0) throw ValidationError("resize_bilinear: bad output size");
  if (oh == im.h && ow == im.w) return im;

  Image out = Image::zeros(oh, ow, im.c);
  const double sy = static_cast<double>(im.h) / oh;
  const double sx = static_cast<double>(im.w) / ow;
  for (int y = 0; y < oh; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(im.h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, im.h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < ow; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::min(std::max(fx, 0.0), static_cast<double>(im.w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, im.w - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < im.c; ++ch) {
        const double top = (1.0 - wx) * im.at(y0, x0, ch) + wx * im.at(y0, x1, ch);
        const double bot = (1.0 - wx) * im.at(y1, x0, ch) + wx * im.at(y1, x1, ch);
        out.at(y, x, ch) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

Image crop_resize(const Image& im, int y, int x, int side) {
  if (side <= 0) throw ValidationError("crop_resize: side must be positive");
  if (y < 0 || x < 0 || y + side > im.h || x + side > im.w)
    throw ValidationError("crop_resize: crop window out of bounds");

  Image crop = Image::zeros(side, side, im.c);
  for (int yy = 0; yy < side; ++yy)
    for (int xx = 0; xx < side; ++xx)
      for (int ch = 0; ch < im.c; ++ch) crop.at(yy, xx, ch) = im.at(y + yy, x + xx, ch);
  return resize_bilinear(crop, im.h, im.w);
}

Image hflip(const Image& im, bool negate_channel0) {
  Image out = Image::zeros(im.h, im.w, im.c);
  for (int y = 0; y < im.h; ++y)
    for (int x = 0; x < im.w; ++x)
      for (int ch = 0; ch < im.c; ++ch) {
        float v = im.at(y, im.w - 1 - x, ch);
        if (negate_channel0 && ch == 0) v = -v;
        out.at(y, x, ch) = v;
      }
  return out;
}

Image with_channels(const Image& im, int channels) {
  if (channels == im.c) return im;
  if (im.c == 1 && channels == 3) {
    Image out = Image::zeros(im.h, im.w, 3);
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x) {
        const float v = im.at(y, x, 0);
        out.at(y, x, 0) = v;
        out.at(y, x, 1) = v;
        out.at(y, x, 2) = v;
      }
    return out;
  }
  if (im.c == 3 && channels == 1) {
    Image out = Image::zeros(im.h, im.w, 1);
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x)
        out.at(y, x, 0) = (im.at(y, x, 0) + im.at(y, x, 1) + im.at(y, x, 2)) / 3.0f;
    return out;
  }
  throw ValidationError("with_channels: unsupported conversion " + std::to_string(im.c) + " -> " +
                        std::to_string(channels));
}

}  // namespace ltr3o

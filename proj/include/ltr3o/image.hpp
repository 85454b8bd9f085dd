#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace ltr3o {

// Dense H x W x C image, float pixels, interleaved channels, row-major.
// Frame pixels live in [0, 1]; flow renderings may hold signed values.
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> px;

  static Image zeros(int h, int w, int c) {
    Image im;
    im.h = h;
    im.w = w;
    im.c = c;
    im.px.assign(static_cast<std::size_t>(h) * w * c, 0.0f);
    return im;
  }

  float at(int y, int x, int ch) const {
    return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  float& at(int y, int x, int ch) {
    return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
  std::size_t size() const { return px.size(); }
};

// Bilinear resample to (oh, ow). Pixel centers at half-integer grid, edges clamped.
Image resize_bilinear(const Image& im, int oh, int ow);

// Square crop at (y, x) of the given side, then bilinear resize back to the
// source size. Used by the resized-crop augmentation.
Image crop_resize(const Image& im, int y, int x, int side);

// Horizontal mirror. negate_channel0 flips the sign of channel 0 as well,
// which is the correct transform for flow renderings whose first channel is
// the horizontal displacement.
Image hflip(const Image& im, bool negate_channel0 = false);

// Replicate single-channel data to `channels`, or reduce 3->1 by mean.
Image with_channels(const Image& im, int channels);

// 8-bit image file I/O. Reading accepts any raster format the OpenCV codecs
// understand (png/jpg/pgm/bmp/...) and returns values in [0, 1]; writing
// emits binary PGM (c==1) or PPM (c==3) with round-half-up quantization.
Image read_image8(const std::filesystem::path& path);
void write_image8(const std::filesystem::path& path, const Image& im);

}  // namespace ltr3o

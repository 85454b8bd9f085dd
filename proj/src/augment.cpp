#include "ltr3o/augment.hpp"

#include <algorithm>
#include <cmath>

#include "ltr3o/common.hpp"

namespace ltr3o {

AugmentParams draw_augment(int image_size, RngStream& rng) {
  if (image_size < 2) throw ValidationError("draw_augment: image_size too small");
  const double area = 0.8 + 0.2 * rng.next_real();
  int side = static_cast<int>(std::lround(std::sqrt(area) * image_size));
  side = std::clamp(side, 1, image_size);

  AugmentParams p;
  p.crop_side = side;
  p.crop_y = rng.uniform_int(0, image_size - side);
  p.crop_x = rng.uniform_int(0, image_size - side);
  p.flip = rng.next_real() < 0.5;
  return p;
}

Image apply_augment(const Image& im, const AugmentParams& p, bool flow_channels) {
  Image out = im;
  if (p.crop_side > 0 && p.crop_side != im.h)
    out = crop_resize(out, p.crop_y, p.crop_x, p.crop_side);
  if (p.flip) out = hflip(out, flow_channels);
  return out;
}

}  // namespace ltr3o

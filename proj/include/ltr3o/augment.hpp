#pragma once

#include "ltr3o/image.hpp"
#include "ltr3o/rng.hpp"

namespace ltr3o {

// One geometric transform, shared by all K renderings of a sample so the
// candidates stay aligned.
struct AugmentParams {
  int crop_y = 0;
  int crop_x = 0;
  int crop_side = 0;  // crop window, resized back to the source size
  bool flip = false;
};

// Always consumes exactly four rng draws (area, y, x, flip) so the stream
// position is independent of the outcome.
AugmentParams draw_augment(int image_size, RngStream& rng);

// Crop + resize back, then optional mirror. flow_channels negates channel 0
// (horizontal displacement) on flip; pass false for plain frame images.
Image apply_augment(const Image& im, const AugmentParams& p, bool flow_channels);

}  // namespace ltr3o

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <opencv2/imgcodecs.hpp>

#include "ltr3o/common.hpp"
#include "ltr3o/image.hpp"

namespace ltr3o {

Image read_image8(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw ValidationError("read_image8: cannot decode " + path.string());
  if (m.depth() != CV_8U)
    throw ValidationError("read_image8: expected 8-bit pixels in " + path.string());
  const int ch = m.channels();
  if (ch != 1 && ch != 3 && ch != 4)
    throw ValidationError("read_image8: unsupported channel count in " + path.string());

  Image out = Image::zeros(m.rows, m.cols, ch == 1 ? 1 : 3);
  for (int y = 0; y < m.rows; ++y) {
    const unsigned char* row = m.ptr<unsigned char>(y);
    for (int x = 0; x < m.cols; ++x) {
      if (ch == 1) {
        out.at(y, x, 0) = row[x] / 255.0f;
      } else {
        // OpenCV decodes BGR(A); store RGB.
        out.at(y, x, 0) = row[x * ch + 2] / 255.0f;
        out.at(y, x, 1) = row[x * ch + 1] / 255.0f;
        out.at(y, x, 2) = row[x * ch + 0] / 255.0f;
      }
    }
  }
  return out;
}

void write_image8(const std::filesystem::path& path, const Image& im) {
  if (im.c != 1 && im.c != 3)
    throw ValidationError("write_image8: image must have 1 or 3 channels");
  if (im.h <= 0 || im.w <= 0) throw ValidationError("write_image8: empty image");

  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeError("write_image8: cannot open " + path.string());
  f << (im.c == 1 ? "P5" : "P6") << "\n" << im.w << " " << im.h << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(im.w) * im.c);
  for (int y = 0; y < im.h; ++y) {
    for (int x = 0; x < im.w; ++x)
      for (int ch = 0; ch < im.c; ++ch) {
        const float v = std::min(std::max(im.at(y, x, ch), 0.0f), 1.0f);
        row[static_cast<std::size_t>(x) * im.c + ch] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw RuntimeError("write_image8: short write to " + path.string());
}

}  // namespace ltr3o

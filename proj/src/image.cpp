#include "pofsm/image.hpp"

#include <algorithm>
#include <cmath>

namespace pofsm {

Plane rgb_luminance(const ImageRgb& img) {
  img.check();
  return 0.299f * img.r + 0.587f * img.g + 0.114f * img.b;
}

Plane bilinear_resize(const Plane& src, long rows, long cols) {
  if (rows <= 0 || cols <= 0) throw ConfigError("resize target must be positive");
  if (src.rows() == 0 || src.cols() == 0) throw DataError("cannot resize an empty plane");
  if (src.rows() == rows && src.cols() == cols) return src;

  Plane out(rows, cols);
  const double sr = static_cast<double>(src.rows()) / static_cast<double>(rows);
  const double sc = static_cast<double>(src.cols()) / static_cast<double>(cols);
  for (long r = 0; r < rows; ++r) {
    // Center-aligned source coordinate, clamped so the 2x2 patch stays in bounds.
    double y = (static_cast<double>(r) + 0.5) * sr - 0.5;
    y = std::clamp(y, 0.0, static_cast<double>(src.rows() - 1));
    const long y0 = static_cast<long>(std::floor(y));
    const long y1 = std::min(y0 + 1, src.rows() - 1);
    const double fy = y - static_cast<double>(y0);
    for (long c = 0; c < cols; ++c) {
      double x = (static_cast<double>(c) + 0.5) * sc - 0.5;
      x = std::clamp(x, 0.0, static_cast<double>(src.cols() - 1));
      const long x0 = static_cast<long>(std::floor(x));
      const long x1 = std::min(x0 + 1, src.cols() - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = (1.0 - fx) * src(y0, x0) + fx * src(y0, x1);
      const double bot = (1.0 - fx) * src(y1, x0) + fx * src(y1, x1);
      out(r, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
    }
  }
  return out;
}

ImageRgb bilinear_resize(const ImageRgb& src, long rows, long cols) {
  src.check();
  ImageRgb out;
  out.r = bilinear_resize(src.r, rows, cols);
  out.g = bilinear_resize(src.g, rows, cols);
  out.b = bilinear_resize(src.b, rows, cols);
  return out;
}

Plane hflip(const Plane& src) { return src.rowwise().reverse(); }

ImageRgb hflip(const ImageRgb& src) {
  src.check();
  ImageRgb out;
  out.r = hflip(src.r);
  out.g = hflip(src.g);
  out.b = hflip(src.b);
  return out;
}

}  // namespace pofsm

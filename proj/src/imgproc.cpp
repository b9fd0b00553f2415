#include "octpost/imgproc.hpp"

#include <algorithm>
#include <cmath>

namespace octpost {

namespace {

inline int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (float& v : k) v = static_cast<float>(v / sum);
  return k;
}

FloatImage convolve_separable(const FloatImage& src,
                              const std::vector<float>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = src.width;
  const int h = src.height;
  FloatImage tmp(w, h);
  for (int y = 0; y < h; ++y) {
    const float* row = &src.px[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * row[reflect(x + i, w)];
      tmp.at(x, y) = acc;
    }
  }
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp.at(x, reflect(y + i, h));
      out.at(x, y) = acc;
    }
  }
  return out;
}

}  // namespace

FloatImage to_float(const Image& image) {
  FloatImage out(image.width, image.height);
  for (std::size_t i = 0; i < image.pixels.size(); ++i)
    out.px[i] = static_cast<float>(image.pixels[i]);
  return out;
}

Image to_u8(const FloatImage& image) {
  Image out(image.width, image.height);
  for (std::size_t i = 0; i < image.px.size(); ++i)
    out.pixels[i] = clamp_round_u8(image.px[i]);
  return out;
}

FloatImage gaussian_blur(const FloatImage& image, double sigma) {
  if (sigma <= 0.0) return image;
  return convolve_separable(image, gaussian_kernel(sigma));
}

FloatImage box_blur3(const FloatImage& image) {
  const std::vector<float> k = {1.0f / 3, 1.0f / 3, 1.0f / 3};
  return convolve_separable(image, k);
}

void box_sum_inplace(FloatImage& image, int radius, FloatImage& scratch) {
  const int w = image.width;
  const int h = image.height;
  if (scratch.width != w || scratch.height != h) scratch = FloatImage(w, h);

  // rows: prefix sums, truncated window at the borders
  for (int y = 0; y < h; ++y) {
    const float* row = &image.px[static_cast<std::size_t>(y) * w];
    float* out = &scratch.px[static_cast<std::size_t>(y) * w];
    double run = 0.0;
    for (int x = 0; x < std::min(radius + 1, w); ++x) run += row[x];
    for (int x = 0; x < w; ++x) {
      out[x] = static_cast<float>(run);
      const int add = x + radius + 1;
      const int drop = x - radius;
      if (add < w) run += row[add];
      if (drop >= 0) run -= row[drop];
    }
  }
  // columns
  for (int x = 0; x < w; ++x) {
    double run = 0.0;
    for (int y = 0; y < std::min(radius + 1, h); ++y) run += scratch.at(x, y);
    for (int y = 0; y < h; ++y) {
      image.at(x, y) = static_cast<float>(run);
      const int add = y + radius + 1;
      const int drop = y - radius;
      if (add < h) run += scratch.at(x, add);
      if (drop >= 0) run -= scratch.at(x, drop);
    }
  }
}

float sample_clamped(const FloatImage& image, float x, float y) {
  const int w = image.width;
  const int h = image.height;
  x = std::clamp(x, 0.0f, static_cast<float>(w - 1));
  y = std::clamp(y, 0.0f, static_cast<float>(h - 1));
  const int x0 = std::min(static_cast<int>(x), w - 2 >= 0 ? w - 2 : 0);
  const int y0 = std::min(static_cast<int>(y), h - 2 >= 0 ? h - 2 : 0);
  const float fx = x - x0;
  const float fy = y - y0;
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const float a = image.at(x0, y0) * (1 - fx) + image.at(x1, y0) * fx;
  const float b = image.at(x0, y1) * (1 - fx) + image.at(x1, y1) * fx;
  return a * (1 - fy) + b * fy;
}

float sample_zero(const FloatImage& image, float x, float y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const float fx = x - x0;
  const float fy = y - y0;
  auto tap = [&](int xi, int yi) -> float {
    if (xi < 0 || yi < 0 || xi >= image.width || yi >= image.height)
      return 0.0f;
    return image.at(xi, yi);
  };
  const float a = tap(x0, y0) * (1 - fx) + tap(x0 + 1, y0) * fx;
  const float b = tap(x0, y0 + 1) * (1 - fx) + tap(x0 + 1, y0 + 1) * fx;
  return a * (1 - fy) + b * fy;
}

double sample_zero_u8(const Image& image, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto tap = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= image.width || yi >= image.height)
      return 0.0;
    return image.at(xi, yi);
  };
  const double a = tap(x0, y0) * (1 - fx) + tap(x0 + 1, y0) * fx;
  const double b = tap(x0, y0 + 1) * (1 - fx) + tap(x0 + 1, y0 + 1) * fx;
  return a * (1 - fy) + b * fy;
}

FloatImage downsample_half(const FloatImage& image) {
  const FloatImage blurred = gaussian_blur(image, 1.0);
  const int w = std::max(1, image.width / 2);
  const int h = std::max(1, image.height / 2);
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = blurred.at(2 * x, 2 * y);
  return out;
}

FloatImage resize_bilinear(const FloatImage& image, int width, int height) {
  FloatImage out(width, height);
  const float sx = static_cast<float>(image.width) / width;
  const float sy = static_cast<float>(image.height) / height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.at(x, y) = sample_clamped(image, (x + 0.5f) * sx - 0.5f,
                                    (y + 0.5f) * sy - 0.5f);
  return out;
}

void gradients(const FloatImage& image, FloatImage& gx, FloatImage& gy) {
  const int w = image.width;
  const int h = image.height;
  gx = FloatImage(w, h);
  gy = FloatImage(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(0, x - 1);
      const int xp = std::min(w - 1, x + 1);
      const int ym = std::max(0, y - 1);
      const int yp = std::min(h - 1, y + 1);
      gx.at(x, y) = 0.5f * (image.at(xp, y) - image.at(xm, y));
      gy.at(x, y) = 0.5f * (image.at(x, yp) - image.at(x, ym));
    }
  }
}

}  // namespace octpost

#pragma once

#include <vector>

#include "octpost/image.hpp"

namespace octpost {

// Float working image for filtering and resampling stages.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> px;

  FloatImage() = default;
  FloatImage(int w, int h, float fill = 0.0f)
      : width(w), height(h),
        px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  float at(int x, int y) const {
    return px[static_cast<std::size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return px[static_cast<std::size_t>(y) * width + x];
  }
};

FloatImage to_float(const Image& image);
Image to_u8(const FloatImage& image);  // clamp + round half-up

// Separable Gaussian, reflected borders. Kernel radius ceil(3*sigma).
FloatImage gaussian_blur(const FloatImage& image, double sigma);

// 3x3 box blur, reflected borders.
FloatImage box_blur3(const FloatImage& image);

// Moving-window sums along rows then columns (truncated at borders).
// Used for the dense least-squares flow windows.
void box_sum_inplace(FloatImage& image, int radius, FloatImage& scratch);

// Bilinear sample with edge clamping.
float sample_clamped(const FloatImage& image, float x, float y);

// Bilinear sample; out-of-bounds taps contribute zero, fully outside is 0.
float sample_zero(const FloatImage& image, float x, float y);
double sample_zero_u8(const Image& image, double x, double y);

// Half-size downsample (Gaussian pre-blur sigma 1, then 2x decimation).
FloatImage downsample_half(const FloatImage& image);

// Bilinear resize to the given dimensions.
FloatImage resize_bilinear(const FloatImage& image, int width, int height);

// Central-difference gradients, clamped at borders.
void gradients(const FloatImage& image, FloatImage& gx, FloatImage& gy);

}  // namespace octpost

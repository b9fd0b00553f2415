#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "octpost/error.hpp"

namespace octpost {

inline constexpr double kDefaultAxialResUmPerPx = 0.836;

// Store-time rounding is half-up throughout (floor(v + 0.5), clamped).
inline std::uint8_t clamp_round_u8(double v) {
  const double r = std::floor(v + 0.5);
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

// 8-bit grayscale B-scan. Row-major storage; at(x, y) addresses column x
// (lateral position) and row y (depth from top).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w),
        height(h),
        pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h),
               fill) {
    require(w >= 1 && h >= 1, Err::DimensionMismatch,
            "image dimensions must be >= 1");
  }

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }

  std::size_t pixel_count() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
  bool same_size(const Image& other) const {
    return width == other.width && height == other.height;
  }
  bool operator==(const Image& other) const = default;
};

// Ordered acquisition of same-size frames plus axial calibration.
struct Stack {
  std::vector<Image> frames;
  double axial_res_um_per_px = kDefaultAxialResUmPerPx;
  std::vector<std::string> source_labels;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  std::size_t frame_count() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
};

// Throws DimensionMismatch unless every frame shares the first frame's size.
void validate_uniform(const Stack& stack);

struct HistogramStats {
  double mean = 0.0;
  double std_dev = 0.0;  // population
  std::uint64_t zero_count = 0;
  std::array<std::uint64_t, 256> histogram{};

  std::uint64_t total() const;
};

HistogramStats stats_from_histogram(const std::array<std::uint64_t, 256>& h);
HistogramStats histogram_stats(const Image& image);
HistogramStats histogram_stats(const Stack& stack);

// Pixel-wise mean of adjacent groups of group_size frames, rounded half-up.
// Frame count must divide evenly (GroupMismatch otherwise).
Stack group_average(const Stack& stack, int group_size);

// Mean projection over depth: one output row per frame, one column per
// lateral position. NoFrames on an empty stack.
Image enface(const Stack& stack);

// Shifts content down by offset rows (up when negative), zero fill.
Image roll_vertical(const Image& image, int offset);

}  // namespace octpost

#pragma once

#include <vector>

#include "octpost/image.hpp"

namespace octpost {

// Dense per-pixel displacement mapping reference coordinates into the
// target: reference(x, y) ~= target(x + u, y + v).
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h),
        u(static_cast<std::size_t>(w) * h, 0.0f),
        v(static_cast<std::size_t>(w) * h, 0.0f) {}

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
};

struct FlowParams {
  int levels = 3;      // pyramid levels
  int window = 15;     // odd least-squares window side
  int iterations = 10; // refinement iterations per level
};

// Coarse-to-fine iterative local least-squares (pyramidal Lucas-Kanade,
// dense). DimensionMismatch unless the images are the same size.
FlowField optical_flow(const Image& reference, const Image& target,
                       const FlowParams& params = {});

// Bilinear resample of img at (x + u, y + v); out-of-bounds samples are 0.
Image warp_flow(const Image& img, const FlowField& flow);

}  // namespace octpost

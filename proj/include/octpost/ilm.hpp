#pragma once

#include <array>
#include <vector>

#include "octpost/homography.hpp"
#include "octpost/image.hpp"

namespace octpost {

// Per-column subpixel depth of the inner limiting membrane. Gap columns
// carry NaN.
struct IlmTrace {
  std::vector<double> depth;
  double mean_height = 0.0;  // mean over non-gap columns

  int valid_count() const;
  bool is_gap(int column) const;
};

struct IlmParams {
  // minimum vertical-gradient peak (gray levels per pixel) for a column
  // to count as traced
  double noise_floor = 6.0;
};

// Scans each column top-down for the strongest positive vertical gradient
// (the dark vitreous to bright retina edge) and refines the peak with a
// 3-point log-parabola fit. AllGaps when no column qualifies.
IlmTrace trace_ilm(const Image& frame, const IlmParams& params = {});

// Frames whose mean ILM height jumps by more than drop_threshold_px against
// any frame within the preceding `window` indices, plus always the central
// index. Sorted, unique.
std::vector<int> select_reference_frames(const Stack& stack,
                                         double drop_threshold_px = 4.0,
                                         int window = 5,
                                         const IlmParams& params = {});

struct HeightAdjustResult {
  Stack stack;
  std::vector<int> offsets;  // applied vertical shifts, rows (down positive)
};

// Rolls every frame so its mean ILM height matches the reference frame's
// (central frame when reference_index < 0). Zero fill at exposed rows.
HeightAdjustResult height_adjust_register(const Stack& stack,
                                          int reference_index = -1,
                                          const IlmParams& params = {});

// Deterministic slab corners: ILM trace on top, deepest strong
// negative-gradient boundary on the bottom, line-fit against column noise.
// Returned in order top-left, top-right, bottom-right, bottom-left.
std::array<Point, 4> estimate_slab_quad(const Image& frame,
                                        const IlmParams& params = {});

}  // namespace octpost

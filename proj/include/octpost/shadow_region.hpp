#pragma once

#include "octpost/image.hpp"

namespace octpost {

// Column interval [col_start, col_end) marking a shadow artifact on one
// frame; row bounds default to the full height (row_end = -1).
struct ShadowRegion {
  int frame_index = 0;
  int col_start = 0;
  int col_end = 0;
  int row_start = 0;
  int row_end = -1;

  int effective_row_end(int height) const {
    return row_end < 0 ? height : row_end;
  }

  void validate(int width, int height) const {
    require(col_start >= 0 && col_start < col_end && col_end <= width,
            Err::RegionOutOfBounds,
            "column interval [" + std::to_string(col_start) + ", " +
                std::to_string(col_end) + ") outside width " +
                std::to_string(width));
    const int re = effective_row_end(height);
    require(row_start >= 0 && row_start < re && re <= height,
            Err::RegionOutOfBounds, "row interval outside frame height");
  }
};

}  // namespace octpost

#pragma once

#include <string>
#include <vector>

#include "octpost/image.hpp"

namespace octpost {

struct BoundaryGap {
  int boundary = 0;
  int col_start = 0;  // [col_start, col_end)
  int col_end = 0;
};

// Ordered retinal boundaries, one subpixel depth per column (NaN = gap).
struct BoundaryMap {
  std::vector<std::string> names;
  std::vector<std::vector<double>> depth;  // [boundary][column]
  int width = 0;
  std::vector<BoundaryGap> unfilled;  // populated by interpolate_gaps

  static std::vector<std::string> default_names();

  int boundary_count() const { return static_cast<int>(depth.size()); }
};

// Builds a map directly from known per-boundary depth curves (phantom
// ground truth, precomputed traces).
BoundaryMap make_boundary_map(std::vector<std::string> names,
                              std::vector<std::vector<double>> depth);

// Traces boundary-line masks column by column: foreground runs become
// boundary samples, assigned in order when the count matches and by
// vertical proximity to neighbouring assigned columns otherwise.
// Filled-region masks are rejected (FilledMask).
BoundaryMap trace_boundaries(const Image& mask, int expected_count,
                             std::vector<std::string> names = {});

// Linear fill of interior gaps up to max_gap_cols wide; wider and edge gaps
// stay and are listed in `unfilled`.
BoundaryMap interpolate_gaps(const BoundaryMap& map, int max_gap_cols = 40);

struct LayerThickness {
  std::string name;
  double mean_px = 0.0;
  double std_px = 0.0;
  double mean_um = 0.0;  // mean_px * axial_res, exact
  int columns = 0;       // columns where both boundaries were present
  double percent_error = -1.0;  // vs reference; negative = not compared
};

struct ThicknessReport {
  std::vector<LayerThickness> layers;
  LayerThickness full_span;  // first to last boundary
  double axial_res_um_per_px = kDefaultAxialResUmPerPx;
  double mean_abs_rel_error = -1.0;  // negative = no reference supplied
};

// Per-column differences between adjacent boundaries over columns where
// both are present. NoOverlapColumns names the first empty layer.
ThicknessReport compute_thickness(
    const BoundaryMap& map,
    double axial_res_um_per_px = kDefaultAxialResUmPerPx);

// Adds per-layer percent error and the mean absolute relative error
// against (layer name, reference micron) rows. UnknownLayer when a
// reference row names no computed layer.
void compare_reference(
    ThicknessReport& report,
    const std::vector<std::pair<std::string, double>>& reference);

// Renders rounded boundary depths back into a 1 px line mask.
Image render_boundary_mask(const BoundaryMap& map, int height);

}  // namespace octpost

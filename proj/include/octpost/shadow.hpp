#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "octpost/image.hpp"
#include "octpost/shadow_region.hpp"

namespace octpost {

struct ShadowDetectParams {
  double dip_fraction = 0.25;  // required dip below the local running median
  int median_window = 51;      // columns, odd
  int min_width = 2;
  double max_width_frac = 0.2;
};

// Column-profile dip detector: smoothed per-column mean intensity against a
// local running median; adjacent dips merged, implausible widths dropped.
// An empty result is valid.
std::vector<ShadowRegion> detect_shadow_columns(
    const Image& frame, const ShadowDetectParams& params = {},
    int frame_index = 0);

enum class BaselineMethod {
  VerticalEdge,
  RollingAvg,
  ValueScale,
  ColumnDiff,
  BlurThreshold,
};

struct BaselineParams {
  int window = 10;     // rolling_avg column-axis window
  double alpha = 1.3;  // value_scale gain
  int threshold = 64;  // blur_threshold cutoff
};

// The five classical single-image transforms, exposed for benchmarking
// only; the pipeline never routes them into suppression.
Image classical_baseline(const Image& img, BaselineMethod method,
                         const BaselineParams& params = {});

struct CocoImportResult {
  std::vector<ShadowRegion> regions;
  std::vector<std::string> unmatched_files;
};

// Reads the COCO subset {images[].file_name, annotations[].bbox}; each box
// becomes a ShadowRegion on the frame whose source label matches.
CocoImportResult import_coco_regions(const std::filesystem::path& json_path,
                                     const Stack& stack);

enum class SuppressMode { Verbatim, ComplementBoost };

// Pixel update inside shadow regions only.
//   verbatim:        new = alpha * (128 - old) / 128     (printed 8-bit form)
//   complement_boost new = old + alpha * (255 - old) / 255 (dark-lift default)
// Regions are applied as a pixel set, so overlapping inputs transform each
// pixel once. frame_index on the regions is ignored here.
Image suppress_shadows(const Image& img, std::span<const ShadowRegion> regions,
                       double alpha,
                       SuppressMode mode = SuppressMode::ComplementBoost);

// Stack-wide variant; regions are routed to frames by frame_index.
Stack suppress_shadows(const Stack& stack,
                       std::span<const ShadowRegion> regions, double alpha,
                       SuppressMode mode = SuppressMode::ComplementBoost);

struct AlphaSearch {
  double alpha_min = 1.0;
  double alpha_max = 2.0;
  double alpha_step = 0.05;
  double w_mean = 1.0;
  double w_std = 1.0;
  double w_zero = 1.0;
  SuppressMode mode = SuppressMode::ComplementBoost;
};

struct AlphaTracePoint {
  double alpha = 0.0;
  double objective = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
  std::uint64_t zeros = 0;
};

struct AlphaResult {
  double alpha_star = 0.0;
  std::vector<AlphaTracePoint> trace;  // one row per grid point, ascending
};

// Exhaustive grid minimization of
//   J(a) = w_zero * zeros_after/zeros_before
//        + w_std  * std_after/std_before
//        - w_mean * mean_after/mean_before
// over the whole-stack histogram. Smallest alpha wins ties. A ratio term
// with a zero denominator is defined as 0.
AlphaResult optimize_alpha(const Stack& stack,
                           std::span<const ShadowRegion> regions,
                           const AlphaSearch& search = {});

}  // namespace octpost

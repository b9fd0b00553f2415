#include "octpost/ilm.hpp"

#include <algorithm>
#include <cmath>

#include "octpost/parallel.hpp"

namespace octpost {

namespace {

double column_gradient(const Image& img, int x, int y) {
  return 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
}

// Subpixel peak via log-parabola (local Gaussian) when the three samples
// are positive, plain parabola otherwise.
double refine_peak(double left, double center, double right) {
  double l = left, c = center, r = right;
  if (l > 0 && c > 0 && r > 0) {
    l = std::log(l);
    c = std::log(c);
    r = std::log(r);
  }
  const double denom = l - 2.0 * c + r;
  if (std::abs(denom) < 1e-12) return 0.0;
  return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
}

struct ColumnEdge {
  double depth = 0.0;
  bool valid = false;
};

// Strongest positive gradient scanning down (ILM), or the deepest strong
// negative gradient walked up to its local peak (slab bottom).
ColumnEdge trace_column(const Image& img, int x, double noise_floor,
                        bool bottom) {
  ColumnEdge edge;
  auto grad = [&](int y) {
    const double g = column_gradient(img, x, y);
    return bottom ? -g : g;
  };
  int peak_y = -1;
  if (!bottom) {
    double best = noise_floor;
    for (int y = 1; y + 1 < img.height; ++y) {
      const double g = grad(y);
      if (g > best) {
        best = g;
        peak_y = y;
      }
    }
  } else {
    for (int y = img.height - 2; y >= 1; --y) {
      if (grad(y) >= noise_floor) {
        peak_y = y;
        break;
      }
    }
    while (peak_y > 1 && grad(peak_y - 1) > grad(peak_y)) --peak_y;
  }
  if (peak_y < 0) return edge;
  const double gl = grad(std::max(1, peak_y - 1));
  const double gr = grad(std::min(img.height - 2, peak_y + 1));
  edge.depth = peak_y + refine_peak(gl, grad(peak_y), gr);
  edge.valid = true;
  return edge;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double eval(double x) const { return slope * x + intercept; }
};

LineFit fit_line(const std::vector<double>& depth) {
  LineFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t x = 0; x < depth.size(); ++x) {
    if (std::isnan(depth[x])) continue;
    sx += static_cast<double>(x);
    sy += depth[x];
    sxx += static_cast<double>(x) * x;
    sxy += static_cast<double>(x) * depth[x];
    ++n;
  }
  const double denom = n * sxx - sx * sx;
  if (n < 2 || std::abs(denom) < 1e-12) {
    fit.intercept = n > 0 ? sy / n : 0.0;
    return fit;
  }
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

}  // namespace

int IlmTrace::valid_count() const {
  int n = 0;
  for (double d : depth)
    if (!std::isnan(d)) ++n;
  return n;
}

bool IlmTrace::is_gap(int column) const { return std::isnan(depth[column]); }

IlmTrace trace_ilm(const Image& frame, const IlmParams& params) {
  require(frame.height >= 3, Err::AllGaps, "frame too short to trace");
  IlmTrace trace;
  trace.depth.assign(frame.width, std::nan(""));
  double sum = 0.0;
  int n = 0;
  for (int x = 0; x < frame.width; ++x) {
    const ColumnEdge edge = trace_column(frame, x, params.noise_floor, false);
    if (!edge.valid) continue;
    trace.depth[x] = edge.depth;
    sum += edge.depth;
    ++n;
  }
  require(n > 0, Err::AllGaps, "no column produced an ILM trace");
  trace.mean_height = sum / n;
  return trace;
}

std::vector<int> select_reference_frames(const Stack& stack,
                                         double drop_threshold_px, int window,
                                         const IlmParams& params) {
  const int n = static_cast<int>(stack.frames.size());
  require(window >= 2, Err::BadParams, "window must be >= 2");
  require(n >= window, Err::NoFrames,
          "stack shorter than the comparison window");
  validate_uniform(stack);

  std::vector<double> height(n);
  parallel_for(stack.frames.size(), [&](std::size_t i) {
    height[i] = trace_ilm(stack.frames[i], params).mean_height;
  });

  std::vector<int> flagged;
  for (int k = 1; k < n; ++k) {
    const int from = std::max(0, k - window + 1);
    for (int j = from; j < k; ++j) {
      if (std::abs(height[k] - height[j]) > drop_threshold_px) {
        flagged.push_back(k);
        break;
      }
    }
  }
  flagged.push_back(n / 2);
  std::sort(flagged.begin(), flagged.end());
  flagged.erase(std::unique(flagged.begin(), flagged.end()), flagged.end());
  return flagged;
}

HeightAdjustResult height_adjust_register(const Stack& stack,
                                          int reference_index,
                                          const IlmParams& params) {
  require(!stack.frames.empty(), Err::NoFrames, "empty stack");
  validate_uniform(stack);
  const int n = static_cast<int>(stack.frames.size());
  if (reference_index < 0) reference_index = n / 2;
  require(reference_index < n, Err::BadParams, "reference index out of range");

  const double ref_height =
      trace_ilm(stack.frames[reference_index], params).mean_height;

  HeightAdjustResult result;
  result.stack.axial_res_um_per_px = stack.axial_res_um_per_px;
  result.stack.source_labels = stack.source_labels;
  result.stack.frames.resize(n);
  result.offsets.assign(n, 0);
  parallel_for(stack.frames.size(), [&](std::size_t i) {
    const double h = trace_ilm(stack.frames[i], params).mean_height;
    // rint keeps a second application at offset 0 even on exact .5 residue
    const int offset = static_cast<int>(std::rint(ref_height - h));
    result.offsets[i] = offset;
    result.stack.frames[i] = roll_vertical(stack.frames[i], offset);
  });
  return result;
}

std::array<Point, 4> estimate_slab_quad(const Image& frame,
                                        const IlmParams& params) {
  std::vector<double> top(frame.width, std::nan(""));
  std::vector<double> bottom(frame.width, std::nan(""));
  int top_n = 0, bottom_n = 0;
  int first_col = -1, last_col = -1;
  for (int x = 0; x < frame.width; ++x) {
    const ColumnEdge t = trace_column(frame, x, params.noise_floor, false);
    const ColumnEdge b = trace_column(frame, x, params.noise_floor, true);
    if (t.valid && b.valid && b.depth > t.depth) {
      top[x] = t.depth;
      bottom[x] = b.depth;
      ++top_n;
      ++bottom_n;
      if (first_col < 0) first_col = x;
      last_col = x;
    }
  }
  require(top_n > 1 && bottom_n > 1, Err::NoSlab,
          "no traceable slab in frame");

  // Line fits stabilize the endpoints under speckle; a homography maps the
  // straight slab edges to straight edges, so corners on the fitted lines
  // track the warp.
  const LineFit top_line = fit_line(top);
  const LineFit bottom_line = fit_line(bottom);
  const double xl = static_cast<double>(first_col);
  const double xr = static_cast<double>(last_col);
  return {Point{xl, top_line.eval(xl)}, Point{xr, top_line.eval(xr)},
          Point{xr, bottom_line.eval(xr)}, Point{xl, bottom_line.eval(xl)}};
}

}  // namespace octpost

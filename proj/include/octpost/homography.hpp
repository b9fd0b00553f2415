#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "octpost/image.hpp"

namespace octpost {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct PointPair {
  Point src;
  Point dst;
};

// 3x3 projective transform, row-major, normalized so m[8] == 1.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }
  static Homography translation(double dx, double dy) {
    Homography h;
    h.m = {1, 0, dx, 0, 1, dy, 0, 0, 1};
    return h;
  }

  double det() const;
  Homography normalized() const;  // divide by m[8]; Degenerate if ~0
  Homography inverse() const;     // Degenerate if |det| <= 1e-12
  Point apply(const Point& p) const;
  // composition: (a.compose(b)).apply(p) == a.apply(b.apply(p))
  Homography compose(const Homography& inner) const;
};

// Exact 8-DOF solve mapping each src corner to its dst corner.
// Degenerate when any 3 source or destination points are collinear.
Homography homography_from_quad(const std::array<Point, 4>& src,
                                const std::array<Point, 4>& dst);

// Least-squares DLT over >= 4 pairs with Hartley normalization.
Homography fit_homography(std::span<const PointPair> pairs);

struct RansacOptions {
  int iterations = 2000;
  double inlier_tol_px = 2.0;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography h;
  std::vector<char> inliers;  // parallel to the input pairs
  int inlier_count = 0;
};

// Repeated 4-pair minimal sampling, inliers under symmetric transfer error
// (forward and backward reprojection each within inlier_tol_px), final model
// re-fit by least squares on the best inlier set. Deterministic given seed.
RansacResult estimate_homography_ransac(std::span<const PointPair> pairs,
                                        const RansacOptions& options = {});

// Inverse-mapped bilinear resampling; out-of-bounds samples are 0.
Image warp_perspective(const Image& image, const Homography& h);

}  // namespace octpost

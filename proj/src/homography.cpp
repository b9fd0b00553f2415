#include "octpost/homography.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "octpost/imgproc.hpp"
#include "octpost/rng.hpp"

namespace octpost {

namespace {

using Mat3 = Eigen::Matrix3d;

Mat3 to_eigen(const Homography& h) {
  Mat3 m;
  m << h.m[0], h.m[1], h.m[2], h.m[3], h.m[4], h.m[5], h.m[6], h.m[7], h.m[8];
  return m;
}

Homography from_eigen(const Mat3& m) {
  Homography h;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.m[r * 3 + c] = m(r, c);
  return h;
}

double triangle_area2(const Point& a, const Point& b, const Point& c) {
  return std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

bool any_three_collinear(std::span<const Point> pts, double eps = 1e-9) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        if (triangle_area2(pts[i], pts[j], pts[k]) < eps) return true;
  return false;
}

// Similarity transform moving the centroid to the origin with mean
// distance sqrt(2) (Hartley normalization).
Mat3 normalizing_transform(std::span<const Point> pts) {
  double cx = 0, cy = 0;
  for (const Point& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean_dist = 0;
  for (const Point& p : pts)
    mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  Mat3 t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

// Direct linear transform on normalized coordinates; null vector via SVD.
Homography dlt(std::span<const PointPair> pairs) {
  std::vector<Point> src(pairs.size()), dst(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    src[i] = pairs[i].src;
    dst[i] = pairs[i].dst;
  }
  const Mat3 t_src = normalizing_transform(src);
  const Mat3 t_dst = normalizing_transform(dst);

  Eigen::MatrixXd a(2 * pairs.size(), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double x = t_src(0, 0) * src[i].x + t_src(0, 2);
    const double y = t_src(1, 1) * src[i].y + t_src(1, 2);
    const double u = t_dst(0, 0) * dst[i].x + t_dst(0, 2);
    const double v = t_dst(1, 1) * dst[i].y + t_dst(1, 2);
    a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Mat3 result = t_dst.inverse() * hn * t_src;
  return from_eigen(result).normalized();
}

double transfer_error_sq(const Homography& h, const Homography& h_inv,
                         const PointPair& pair) {
  const Point f = h.apply(pair.src);
  const Point b = h_inv.apply(pair.dst);
  const double df = (f.x - pair.dst.x) * (f.x - pair.dst.x) +
                    (f.y - pair.dst.y) * (f.y - pair.dst.y);
  const double db = (b.x - pair.src.x) * (b.x - pair.src.x) +
                    (b.y - pair.src.y) * (b.y - pair.src.y);
  return std::max(df, db);
}

}  // namespace

double Homography::det() const { return to_eigen(*this).determinant(); }

Homography Homography::normalized() const {
  require(std::abs(m[8]) > 1e-14, Err::Degenerate,
          "homography bottom-right entry is ~0");
  Homography out;
  for (int i = 0; i < 9; ++i) out.m[i] = m[i] / m[8];
  return out;
}

Homography Homography::inverse() const {
  const Mat3 e = to_eigen(*this);
  require(std::abs(e.determinant()) > 1e-12, Err::Degenerate,
          "homography is not invertible");
  return from_eigen(e.inverse()).normalized();
}

Point Homography::apply(const Point& p) const {
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  return {(m[0] * p.x + m[1] * p.y + m[2]) / w,
          (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

Homography Homography::compose(const Homography& inner) const {
  return from_eigen(to_eigen(*this) * to_eigen(inner)).normalized();
}

Homography homography_from_quad(const std::array<Point, 4>& src,
                                const std::array<Point, 4>& dst) {
  require(!any_three_collinear(src) && !any_three_collinear(dst),
          Err::Degenerate, "three quad corners are collinear");
  std::array<PointPair, 4> pairs;
  for (int i = 0; i < 4; ++i) pairs[i] = {src[i], dst[i]};
  const Homography h = dlt(pairs);
  require(std::abs(h.det()) > 1e-12, Err::Degenerate,
          "quad solve produced a singular homography");
  return h;
}

Homography fit_homography(std::span<const PointPair> pairs) {
  require(pairs.size() >= 4, Err::InsufficientMatches,
          "need at least 4 correspondences");
  return dlt(pairs);
}

RansacResult estimate_homography_ransac(std::span<const PointPair> pairs,
                                        const RansacOptions& options) {
  require(pairs.size() >= 4, Err::InsufficientMatches,
          std::to_string(pairs.size()) + " correspondences, need 4");
  require(options.iterations > 0 && options.inlier_tol_px > 0,
          Err::BadParams, "iterations and tolerance must be positive");

  const double tol_sq = options.inlier_tol_px * options.inlier_tol_px;
  const int n = static_cast<int>(pairs.size());
  Rng rng(options.seed);

  auto count_inliers = [&](const Homography& h, std::vector<char>* mask) {
    Homography h_inv;
    try {
      h_inv = h.inverse();
    } catch (const Error&) {
      return -1;
    }
    int count = 0;
    for (int i = 0; i < n; ++i) {
      const bool in = transfer_error_sq(h, h_inv, pairs[i]) < tol_sq;
      if (mask) (*mask)[i] = in ? 1 : 0;
      count += in;
    }
    return count;
  };

  int best_count = -1;
  Homography best_h;
  std::array<int, 4> sample{};
  for (int iter = 0; iter < options.iterations; ++iter) {
    // 4 distinct indices
    for (int k = 0; k < 4; ++k) {
      bool fresh = true;
      do {
        sample[k] = rng.uniform_int(0, n - 1);
        fresh = true;
        for (int j = 0; j < k; ++j)
          if (sample[j] == sample[k]) fresh = false;
      } while (!fresh);
    }
    std::array<Point, 4> s, d;
    for (int k = 0; k < 4; ++k) {
      s[k] = pairs[sample[k]].src;
      d[k] = pairs[sample[k]].dst;
    }
    if (any_three_collinear(s) || any_three_collinear(d)) continue;
    std::array<PointPair, 4> minimal;
    for (int k = 0; k < 4; ++k) minimal[k] = {s[k], d[k]};
    Homography h;
    try {
      h = dlt(minimal);
    } catch (const Error&) {
      continue;
    }
    const int count = count_inliers(h, nullptr);
    if (count > best_count) {
      best_count = count;
      best_h = h;
    }
  }
  require(best_count >= 4, Err::Degenerate,
          "no non-degenerate sample produced a model");

  // two refit rounds on the consensus set
  RansacResult result;
  result.inliers.assign(n, 0);
  result.h = best_h;
  count_inliers(result.h, &result.inliers);
  for (int round = 0; round < 2; ++round) {
    std::vector<PointPair> in;
    for (int i = 0; i < n; ++i)
      if (result.inliers[i]) in.push_back(pairs[i]);
    if (in.size() < 4) break;
    Homography refit;
    try {
      refit = dlt(in);
    } catch (const Error&) {
      break;
    }
    std::vector<char> mask(n, 0);
    const int count = count_inliers(refit, &mask);
    if (count < 4) break;
    result.h = refit;
    result.inliers = std::move(mask);
  }
  result.inlier_count = 0;
  for (char c : result.inliers) result.inlier_count += c;
  result.h = result.h.normalized();
  return result;
}

Image warp_perspective(const Image& image, const Homography& h) {
  const Homography inv = h.inverse();
  Image out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const Point p = inv.apply({static_cast<double>(x),
                                 static_cast<double>(y)});
      out.at(x, y) = clamp_round_u8(sample_zero_u8(image, p.x, p.y));
    }
  }
  return out;
}

}  // namespace octpost

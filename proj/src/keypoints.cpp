#include "octpost/keypoints.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "octpost/imgproc.hpp"
#include "octpost/rng.hpp"

namespace octpost {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 16-pixel Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr int kCircleX[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
constexpr int kCircleY[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};

bool fast_is_corner(const Image& img, int x, int y, int t, int arc) {
  const int center = img.at(x, y);
  const int hi = center + t;
  const int lo = center - t;
  int flags[16];
  for (int i = 0; i < 16; ++i) {
    const int v = img.at(x + kCircleX[i], y + kCircleY[i]);
    flags[i] = v > hi ? 1 : (v < lo ? -1 : 0);
  }
  for (int sign : {1, -1}) {
    int run = 0;
    // doubled walk handles circular wrap-around
    for (int i = 0; i < 32; ++i) {
      if (flags[i & 15] == sign) {
        if (++run >= arc) return true;
      } else {
        run = 0;
      }
    }
  }
  return false;
}

double fast_score(const Image& img, int x, int y, int t) {
  const int center = img.at(x, y);
  double score = 0.0;
  for (int i = 0; i < 16; ++i) {
    const int d = std::abs(img.at(x + kCircleX[i], y + kCircleY[i]) - center);
    if (d > t) score += d - t;
  }
  return score;
}

struct PairSet {
  std::vector<std::array<int, 4>> pts;  // ax, ay, bx, by in [-15, 15]
};

PairSet brief_pairs(int bits, std::uint64_t seed) {
  PairSet set;
  set.pts.resize(bits);
  Rng rng(seed);
  for (auto& p : set.pts) {
    p[0] = rng.uniform_int(-15, 15);
    p[1] = rng.uniform_int(-15, 15);
    p[2] = rng.uniform_int(-15, 15);
    p[3] = rng.uniform_int(-15, 15);
  }
  return set;
}

Descriptor brief_describe(const FloatImage& smoothed, const Keypoint& kp,
                          const PairSet& pairs, double angle) {
  Descriptor d;
  d.kind = Descriptor::Kind::Binary;
  d.bits.assign(pairs.pts.size() / 8, 0);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const int cx = static_cast<int>(std::lround(kp.x));
  const int cy = static_cast<int>(std::lround(kp.y));
  for (std::size_t i = 0; i < pairs.pts.size(); ++i) {
    const auto& p = pairs.pts[i];
    const int ax = cx + static_cast<int>(std::lround(c * p[0] - s * p[1]));
    const int ay = cy + static_cast<int>(std::lround(s * p[0] + c * p[1]));
    const int bx = cx + static_cast<int>(std::lround(c * p[2] - s * p[3]));
    const int by = cy + static_cast<int>(std::lround(s * p[2] + c * p[3]));
    if (smoothed.at(ax, ay) > smoothed.at(bx, by))
      d.bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  return d;
}

// ORB intensity-centroid orientation over a radius-15 disc.
double centroid_orientation(const Image& img, int cx, int cy) {
  constexpr int radius = 15;
  double m10 = 0.0, m01 = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > radius * radius) continue;
      const int x = cx + dx;
      const int y = cy + dy;
      if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
      const double v = img.at(x, y);
      m10 += dx * v;
      m01 += dy * v;
    }
  }
  if (m10 == 0.0 && m01 == 0.0) return 0.0;
  return std::atan2(m01, m10);
}

std::vector<Keypoint> fast_keypoints_nms(const Image& image,
                                         const KeypointParams& params,
                                         int border) {
  // score map over raw corners, then 3x3 non-maximum suppression
  FloatImage score(image.width, image.height, -1.0f);
  std::vector<Keypoint> corners;
  for (int y = border; y < image.height - border; ++y)
    for (int x = border; x < image.width - border; ++x)
      if (fast_is_corner(image, x, y, params.fast_threshold, params.fast_arc))
        score.at(x, y) = static_cast<float>(
            fast_score(image, x, y, params.fast_threshold));

  for (int y = border; y < image.height - border; ++y) {
    for (int x = border; x < image.width - border; ++x) {
      const float s = score.at(x, y);
      if (s < 0.0f) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const float ns = score.at(x + dx, y + dy);
          if (ns < 0.0f) continue;
          if (ns > s || (ns == s && (dy < 0 || (dy == 0 && dx < 0)))) {
            keep = false;
            break;
          }
        }
      }
      if (keep)
        corners.push_back({static_cast<double>(x), static_cast<double>(y),
                           static_cast<double>(s), 0.0});
    }
  }
  std::sort(corners.begin(), corners.end(), [](const Keypoint& a,
                                               const Keypoint& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (static_cast<int>(corners.size()) > params.max_keypoints)
    corners.resize(params.max_keypoints);
  return corners;
}

// 1D quadratic peak refinement; returns offset in [-0.5, 0.5].
double parabola_offset(double left, double center, double right) {
  const double denom = left - 2.0 * center + right;
  if (std::abs(denom) < 1e-12) return 0.0;
  const double off = 0.5 * (left - right) / denom;
  return std::clamp(off, -0.5, 0.5);
}

struct DogStack {
  std::vector<FloatImage> dog;   // 3 difference levels
  FloatImage base;               // blur level used for description
  FloatImage gx, gy;
};

DogStack build_dog(const Image& image, double sigma) {
  DogStack s;
  const FloatImage f = to_float(image);
  std::array<FloatImage, 4> g;
  const double k = std::sqrt(2.0);
  for (int i = 0; i < 4; ++i)
    g[i] = gaussian_blur(f, sigma * std::pow(k, i));
  for (int i = 0; i < 3; ++i) {
    FloatImage d(image.width, image.height);
    for (std::size_t p = 0; p < d.px.size(); ++p)
      d.px[p] = g[i + 1].px[p] - g[i].px[p];
    s.dog.push_back(std::move(d));
  }
  s.base = std::move(g[1]);
  gradients(s.base, s.gx, s.gy);
  return s;
}

double dominant_orientation(const DogStack& s, int cx, int cy) {
  constexpr int radius = 8;
  std::array<double, 36> hist{};
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      const int y = cy + dy;
      if (x < 1 || y < 1 || x >= s.base.width - 1 || y >= s.base.height - 1)
        continue;
      const double gx = s.gx.at(x, y);
      const double gy = s.gy.at(x, y);
      const double mag = std::hypot(gx, gy);
      if (mag < 1e-9) continue;
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * 4.5 * 4.5));
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += 2.0 * kPi;
      int bin = static_cast<int>(angle / (2.0 * kPi) * 36.0) % 36;
      hist[bin] += w * mag;
    }
  }
  int best = 0;
  for (int i = 1; i < 36; ++i)
    if (hist[i] > hist[best]) best = i;
  const double l = hist[(best + 35) % 36];
  const double r = hist[(best + 1) % 36];
  const double off = parabola_offset(l, hist[best], r);
  return (best + 0.5 + off) * (2.0 * kPi / 36.0);
}

Descriptor sift_describe(const DogStack& s, const Keypoint& kp) {
  // 4x4 spatial cells x 8 orientation bins over a rotated 16x16 grid
  Descriptor d;
  d.kind = Descriptor::Kind::Real;
  d.values.assign(128, 0.0f);
  const double c = std::cos(kp.orientation);
  const double sn = std::sin(kp.orientation);
  for (double j = -7.5; j <= 7.5; j += 1.0) {
    for (double i = -7.5; i <= 7.5; i += 1.0) {
      const double rx = c * i - sn * j;
      const double ry = sn * i + c * j;
      const float x = static_cast<float>(kp.x + rx);
      const float y = static_cast<float>(kp.y + ry);
      if (x < 1 || y < 1 || x >= s.base.width - 2 || y >= s.base.height - 2)
        continue;
      const double gx = sample_clamped(s.gx, x, y);
      const double gy = sample_clamped(s.gy, x, y);
      const double mag = std::hypot(gx, gy);
      if (mag < 1e-9) continue;
      double angle = std::atan2(gy, gx) - kp.orientation;
      while (angle < 0) angle += 2.0 * kPi;
      while (angle >= 2.0 * kPi) angle -= 2.0 * kPi;
      const double w = std::exp(-(i * i + j * j) / (2.0 * 8.0 * 8.0));

      // bilinear spatial weights over the 4 cells, linear orientation split
      const double cell_x = (i + 8.0) / 4.0 - 0.5;
      const double cell_y = (j + 8.0) / 4.0 - 0.5;
      const double obin = angle / (2.0 * kPi) * 8.0 - 0.5;
      const int cx0 = static_cast<int>(std::floor(cell_x));
      const int cy0 = static_cast<int>(std::floor(cell_y));
      const int ob0 = static_cast<int>(std::floor(obin));
      const double fx = cell_x - cx0;
      const double fy = cell_y - cy0;
      const double fo = obin - ob0;
      for (int dy = 0; dy <= 1; ++dy) {
        const int cy1 = cy0 + dy;
        if (cy1 < 0 || cy1 > 3) continue;
        for (int dx = 0; dx <= 1; ++dx) {
          const int cx1 = cx0 + dx;
          if (cx1 < 0 || cx1 > 3) continue;
          for (int dob = 0; dob <= 1; ++dob) {
            const int ob1 = ((ob0 + dob) % 8 + 8) % 8;
            const double weight = w * mag * (dx ? fx : 1 - fx) *
                                  (dy ? fy : 1 - fy) * (dob ? fo : 1 - fo);
            d.values[(cy1 * 4 + cx1) * 8 + ob1] +=
                static_cast<float>(weight);
          }
        }
      }
    }
  }
  // normalize, clamp at 0.2, renormalize
  auto norm = [&] {
    double n = 0.0;
    for (float v : d.values) n += v * v;
    n = std::sqrt(n);
    if (n > 1e-12)
      for (float& v : d.values) v = static_cast<float>(v / n);
  };
  norm();
  for (float& v : d.values) v = std::min(v, 0.2f);
  norm();
  return d;
}

std::vector<std::pair<Keypoint, Descriptor>> detect_dog(
    const Image& image, const KeypointParams& params) {
  const DogStack s = build_dog(image, params.dog_sigma);
  const FloatImage& d0 = s.dog[0];
  const FloatImage& d1 = s.dog[1];
  const FloatImage& d2 = s.dog[2];

  std::vector<Keypoint> kps;
  const int border = 9;
  for (int y = border; y < image.height - border; ++y) {
    for (int x = border; x < image.width - border; ++x) {
      const float v = d1.at(x, y);
      if (std::abs(v) < params.dog_contrast) continue;
      bool is_max = v > 0, is_min = v < 0;
      for (int dy = -1; dy <= 1 && (is_max || is_min); ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const float a = d0.at(x + dx, y + dy);
          const float b = d1.at(x + dx, y + dy);
          const float c = d2.at(x + dx, y + dy);
          if (a >= v || c >= v || (b >= v && !(dx == 0 && dy == 0)))
            is_max = false;
          if (a <= v || c <= v || (b <= v && !(dx == 0 && dy == 0)))
            is_min = false;
          if (!is_max && !is_min) break;
        }
      }
      if (!is_max && !is_min) continue;
      Keypoint kp;
      kp.x = x + parabola_offset(d1.at(x - 1, y), v, d1.at(x + 1, y));
      kp.y = y + parabola_offset(d1.at(x, y - 1), v, d1.at(x, y + 1));
      kp.score = std::abs(v);
      kps.push_back(kp);
    }
  }
  std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (static_cast<int>(kps.size()) > params.max_keypoints)
    kps.resize(params.max_keypoints);

  std::vector<std::pair<Keypoint, Descriptor>> out;
  out.reserve(kps.size());
  for (Keypoint& kp : kps) {
    kp.orientation = dominant_orientation(
        s, static_cast<int>(std::lround(kp.x)),
        static_cast<int>(std::lround(kp.y)));
    Descriptor d = sift_describe(s, kp);
    double mass = 0.0;
    for (float v : d.values) mass += v;
    if (mass < 1e-9) continue;  // empty gradient neighborhood
    out.emplace_back(kp, std::move(d));
  }
  return out;
}

std::vector<std::pair<Keypoint, Descriptor>> detect_fast_family(
    const Image& image, const KeypointParams& params, bool oriented) {
  require(params.brief_bits == 128 || params.brief_bits == 256 ||
              params.brief_bits == 512,
          Err::BadParams, "descriptor length must be 128, 256 or 512");
  // margin covers the rotated 31x31 BRIEF patch
  const int border = 23;
  std::vector<Keypoint> corners = fast_keypoints_nms(image, params, 3);
  const FloatImage smoothed = gaussian_blur(to_float(image), 2.0);
  const PairSet pairs = brief_pairs(params.brief_bits, params.brief_pair_seed);

  std::vector<std::pair<Keypoint, Descriptor>> out;
  out.reserve(corners.size());
  for (Keypoint& kp : corners) {
    const int x = static_cast<int>(kp.x);
    const int y = static_cast<int>(kp.y);
    if (x < border || y < border || x >= image.width - border ||
        y >= image.height - border)
      continue;
    if (oriented) kp.orientation = centroid_orientation(image, x, y);
    out.emplace_back(kp,
                     brief_describe(smoothed, kp, pairs, kp.orientation));
  }
  return out;
}

}  // namespace

std::vector<Point> fast_corners(const Image& image, int threshold,
                                int arc_len) {
  require(threshold > 0 && arc_len >= 1 && arc_len <= 16, Err::BadParams,
          "FAST needs threshold > 0 and arc in [1, 16]");
  std::vector<Point> out;
  for (int y = 3; y < image.height - 3; ++y)
    for (int x = 3; x < image.width - 3; ++x)
      if (fast_is_corner(image, x, y, threshold, arc_len))
        out.push_back({static_cast<double>(x), static_cast<double>(y)});
  return out;
}

std::vector<std::pair<Keypoint, Descriptor>> detect_keypoints(
    const Image& image, KeypointAlgo algo, const KeypointParams& params) {
  require(image.width >= 32 && image.height >= 32, Err::ImageTooSmall,
          "keypoint detection needs at least 32x32");
  switch (algo) {
    case KeypointAlgo::Dog:
      return detect_dog(image, params);
    case KeypointAlgo::FastBrief:
      return detect_fast_family(image, params, false);
    case KeypointAlgo::Orb:
      return detect_fast_family(image, params, true);
  }
  fail(Err::BadParams, "unknown keypoint algorithm");
}

int hamming_distance(const Descriptor& a, const Descriptor& b) {
  require(a.kind == Descriptor::Kind::Binary &&
              b.kind == Descriptor::Kind::Binary &&
              a.bits.size() == b.bits.size(),
          Err::MixedDescriptorKinds, "hamming needs equal-length binary");
  int d = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i)
    d += std::popcount(static_cast<unsigned>(a.bits[i] ^ b.bits[i]));
  return d;
}

namespace {

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  if (a.kind == Descriptor::Kind::Binary)
    return static_cast<double>(hamming_distance(a, b));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

void check_uniform_kind(const std::vector<Descriptor>& v,
                        const Descriptor& ref) {
  for (const Descriptor& d : v)
    require(d.kind == ref.kind &&
                (d.kind == Descriptor::Kind::Real
                     ? d.values.size() == ref.values.size()
                     : d.bits.size() == ref.bits.size()),
            Err::MixedDescriptorKinds,
            "descriptor sets mix kinds or lengths");
}

}  // namespace

std::vector<Match> match_descriptors(const std::vector<Descriptor>& a,
                                     const std::vector<Descriptor>& b,
                                     double ratio) {
  if (a.empty() || b.empty()) return {};
  check_uniform_kind(a, a.front());
  check_uniform_kind(b, a.front());

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<int> best_for_a(a.size(), -1);
  std::vector<double> best_dist_a(a.size(), inf);
  std::vector<int> best_for_b(b.size(), -1);
  std::vector<double> best_dist_b(b.size(), inf);
  std::vector<double> second_dist_a(a.size(), inf);

  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = descriptor_distance(a[i], b[j]);
      if (d < best_dist_a[i]) {
        second_dist_a[i] = best_dist_a[i];
        best_dist_a[i] = d;
        best_for_a[i] = static_cast<int>(j);
      } else if (d < second_dist_a[i]) {
        second_dist_a[i] = d;
      }
      if (d < best_dist_b[j]) {
        best_dist_b[j] = d;
        best_for_b[j] = static_cast<int>(i);
      }
    }
  }

  std::vector<Match> matches;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int j = best_for_a[i];
    if (j < 0) continue;
    if (best_for_b[j] != static_cast<int>(i)) continue;  // mutual best only
    if (std::isfinite(second_dist_a[i]) &&
        !(best_dist_a[i] < ratio * second_dist_a[i]))
      continue;
    matches.push_back({static_cast<int>(i), j, best_dist_a[i]});
  }
  return matches;
}

}  // namespace octpost

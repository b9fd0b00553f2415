#include "octpost/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace octpost {

namespace {
constexpr double kSnrCapDb = 99.0;
}

MetricReport MetricReport::from_values(std::vector<double> values) {
  MetricReport r;
  r.values = std::move(values);
  if (r.values.empty()) return r;
  r.min = r.values.front();
  r.max = r.values.front();
  double sum = 0.0;
  for (double v : r.values) {
    sum += v;
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
  r.mean = sum / static_cast<double>(r.values.size());
  return r;
}

double pearson_correlation(const Image& a, const Image& b) {
  require(a.same_size(b), Err::DimensionMismatch,
          "correlation needs equal dimensions");
  require(!a.empty(), Err::DimensionMismatch, "empty images");

  const std::size_t n = a.pixel_count();
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += a.pixels[i];
    mean_b += b.pixels[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);

  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.pixels[i] - mean_a;
    const double db = b.pixels[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 && sbb == 0.0)
    fail(Err::ConstantInput, "correlation of two constant images is undefined");
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

int otsu_threshold(const Image& image) {
  std::array<std::uint64_t, 256> hist{};
  for (std::uint8_t p : image.pixels) ++hist[p];
  const double total = static_cast<double>(image.pixel_count());

  double sum_all = 0.0;
  for (int v = 0; v < 256; ++v) sum_all += static_cast<double>(hist[v]) * v;

  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int threshold = 0;
  for (int t = 0; t < 256; ++t) {
    w0 += static_cast<double>(hist[t]);
    if (w0 == 0.0) continue;
    const double w1 = total - w0;
    if (w1 == 0.0) break;
    sum0 += static_cast<double>(hist[t]) * t;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      threshold = t + 1;  // foreground is >= threshold
    }
  }
  return threshold;
}

double snr_db(const Image& image) {
  const int threshold = otsu_threshold(image);
  double fg_sum = 0.0, bg_sum = 0.0;
  std::uint64_t fg_n = 0, bg_n = 0;
  for (std::uint8_t p : image.pixels) {
    if (p >= threshold) {
      fg_sum += p;
      ++fg_n;
    } else {
      bg_sum += p;
      ++bg_n;
    }
  }
  if (fg_n == 0 || bg_n == 0) return kSnrCapDb;
  const double fg_mean = fg_sum / static_cast<double>(fg_n);
  double bg_var = 0.0;
  const double bg_mean = bg_sum / static_cast<double>(bg_n);
  for (std::uint8_t p : image.pixels) {
    if (p < threshold) {
      const double d = p - bg_mean;
      bg_var += d * d;
    }
  }
  const double bg_std = std::sqrt(bg_var / static_cast<double>(bg_n));
  if (bg_std == 0.0) return kSnrCapDb;
  if (fg_mean <= 0.0) return -kSnrCapDb;
  return std::clamp(20.0 * std::log10(fg_mean / bg_std), -kSnrCapDb,
                    kSnrCapDb);
}

double dice(const Image& a, const Image& b) {
  require(a.same_size(b), Err::DimensionMismatch,
          "dice needs equal dimensions");
  std::uint64_t na = 0, nb = 0, inter = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    const bool fa = a.pixels[i] != 0;
    const bool fb = b.pixels[i] != 0;
    na += fa;
    nb += fb;
    inter += fa && fb;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

}  // namespace octpost

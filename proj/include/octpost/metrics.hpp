#pragma once

#include <vector>

#include "octpost/image.hpp"

namespace octpost {

struct MetricReport {
  std::vector<double> values;  // per frame
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;

  static MetricReport from_values(std::vector<double> values);
};

// Pearson coefficient over flattened pixels, in [-1, 1]. Both images
// constant is ConstantInput; exactly one constant yields 0 (no measurable
// linear relationship).
double pearson_correlation(const Image& a, const Image& b);

// Otsu's threshold over a 256-bin histogram (max between-class variance).
int otsu_threshold(const Image& image);

// 20*log10(mean(fg) / std(bg)) with fg = pixels >= Otsu threshold. Capped
// to +-99 dB for degenerate splits.
double snr_db(const Image& image);

// 2|A∩B| / (|A| + |B|) treating nonzero as foreground; 1.0 when both empty.
double dice(const Image& a, const Image& b);

}  // namespace octpost

#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "octpost/image.hpp"
#include "octpost/imgproc.hpp"
#include "octpost/rng.hpp"

namespace testutil {

using octpost::Image;
using octpost::Rng;

inline Image random_image(int w, int h, Rng& rng) {
  Image img(w, h);
  for (auto& p : img.pixels)
    p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

inline Image constant_image(int w, int h, std::uint8_t v) {
  return Image(w, h, v);
}

inline std::filesystem::path make_temp_dir(const std::string& tag) {
  std::string tmpl = (std::filesystem::temp_directory_path() /
                      ("octpost_" + tag + "_XXXXXX"))
                         .string();
  char* made = mkdtemp(tmpl.data());
  if (!made) throw std::runtime_error("mkdtemp failed");
  return std::filesystem::path(made);
}

// Independent FAST oracle: for every pixel, try each of the 16 arc start
// positions explicitly. Deliberately structured differently from the
// library's run-length scan.
inline std::vector<std::pair<int, int>> fast_oracle(const Image& img, int t,
                                                    int n) {
  static const int cx[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
  static const int cy[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};
  std::vector<std::pair<int, int>> corners;
  for (int y = 3; y < img.height - 3; ++y) {
    for (int x = 3; x < img.width - 3; ++x) {
      const int p = img.at(x, y);
      bool corner = false;
      for (int start = 0; start < 16 && !corner; ++start) {
        bool all_bright = true, all_dark = true;
        for (int k = 0; k < n; ++k) {
          const int i = (start + k) % 16;
          const int v = img.at(x + cx[i], y + cy[i]);
          if (!(v > p + t)) all_bright = false;
          if (!(v < p - t)) all_dark = false;
          if (!all_bright && !all_dark) break;
        }
        corner = all_bright || all_dark;
      }
      if (corner) corners.emplace_back(x, y);
    }
  }
  return corners;
}

inline std::vector<double> row_profile(const Image& img) {
  std::vector<double> profile(img.height, 0.0);
  for (int y = 0; y < img.height; ++y) {
    double sum = 0.0;
    for (int x = 0; x < img.width; ++x) sum += img.at(x, y);
    profile[y] = sum / img.width;
  }
  return profile;
}

// Local maxima filtered by topographic prominence (walk outward to the
// nearest higher ground, prominence = peak minus the higher of the two
// valley floors).
inline std::vector<int> find_peaks(const std::vector<double>& v,
                                   double min_prominence) {
  const int n = static_cast<int>(v.size());
  std::vector<int> peaks;
  for (int i = 1; i + 1 < n; ++i) {
    if (!(v[i] > v[i - 1] && v[i] >= v[i + 1])) continue;
    double left_floor = v[i];
    for (int j = i - 1; j >= 0; --j) {
      if (v[j] > v[i]) break;
      left_floor = std::min(left_floor, v[j]);
    }
    double right_floor = v[i];
    for (int j = i + 1; j < n; ++j) {
      if (v[j] > v[i]) break;
      right_floor = std::min(right_floor, v[j]);
    }
    if (v[i] - std::max(left_floor, right_floor) >= min_prominence)
      peaks.push_back(i);
  }
  return peaks;
}

// Crude edge-based boundary segmenter standing in for a learned mask
// source in the mask-quality tests: per column, local maxima of the
// vertical gradient of the 5-column-smoothed profile, gated by gradient
// magnitude and by the brightness of the brighter side. Shadowed columns
// fall below the brightness gate until they are lifted.
inline Image derive_boundary_mask(const Image& img, double grad_floor,
                                  double bright_floor) {
  Image mask(img.width, img.height, 0);
  std::vector<double> column(img.height);
  for (int x = 0; x < img.width; ++x) {
    for (int y = 0; y < img.height; ++y) {
      double sum = 0.0;
      int count = 0;
      for (int k = -2; k <= 2; ++k) {
        const int sx = x + k;
        if (sx < 0 || sx >= img.width) continue;
        sum += img.at(sx, y);
        ++count;
      }
      column[y] = sum / count;
    }
    for (int y = 2; y + 2 < img.height; ++y) {
      const double g = 0.5 * (column[y + 1] - column[y - 1]);
      const double gm = 0.5 * (column[y] - column[y - 2]);
      const double gp = 0.5 * (column[y + 2] - column[y]);
      if (std::abs(g) < grad_floor) continue;
      if (!(std::abs(g) > std::abs(gm) && std::abs(g) >= std::abs(gp)))
        continue;
      if (std::max(column[y - 1], column[y + 1]) < bright_floor) continue;
      mask.at(x, y) = 255;
    }
  }
  return mask;
}

}  // namespace testutil

#include "octpost/shadow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "octpost/parallel.hpp"

namespace octpost {

namespace {

std::vector<double> column_means(const Image& frame) {
  std::vector<double> mean(frame.width, 0.0);
  for (int x = 0; x < frame.width; ++x) {
    double sum = 0.0;
    for (int y = 0; y < frame.height; ++y) sum += frame.at(x, y);
    mean[x] = sum / frame.height;
  }
  return mean;
}

std::vector<double> smooth5(const std::vector<double>& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (int k = -2; k <= 2; ++k) {
      const int j = i + k;
      if (j < 0 || j >= n) continue;
      sum += v[j];
      ++count;
    }
    out[i] = sum / count;
  }
  return out;
}

std::vector<double> running_median(const std::vector<double>& v, int window) {
  const int n = static_cast<int>(v.size());
  const int radius = window / 2;
  std::vector<double> out(n, 0.0);
  std::vector<double> buf;
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - radius);
    const int hi = std::min(n - 1, i + radius);
    buf.assign(v.begin() + lo, v.begin() + hi + 1);
    const std::size_t mid = buf.size() / 2;
    std::nth_element(buf.begin(), buf.begin() + mid, buf.end());
    out[i] = buf[mid];
  }
  return out;
}

}  // namespace

std::vector<ShadowRegion> detect_shadow_columns(
    const Image& frame, const ShadowDetectParams& params, int frame_index) {
  require(params.median_window >= 3 && params.dip_fraction > 0.0 &&
              params.dip_fraction < 1.0 && params.min_width >= 1 &&
              params.max_width_frac > 0.0,
          Err::BadParams, "invalid shadow detection parameters");
  require(frame.width > params.median_window, Err::BadParams,
          "frame narrower than the median window");

  const std::vector<double> profile = column_means(frame);
  const std::vector<double> smoothed = smooth5(profile);
  const std::vector<double> median =
      running_median(smoothed, params.median_window);

  std::vector<char> marked(frame.width, 0);
  for (int x = 0; x < frame.width; ++x)
    marked[x] = smoothed[x] < (1.0 - params.dip_fraction) * median[x];

  const int max_width =
      static_cast<int>(params.max_width_frac * frame.width);
  std::vector<ShadowRegion> regions;
  int x = 0;
  while (x < frame.width) {
    if (!marked[x]) {
      ++x;
      continue;
    }
    int end = x;
    while (end < frame.width && marked[end]) ++end;

    // trim boundary columns smeared in by the profile smoothing
    int lo = x, hi = end;
    const auto raw_dip = [&](int c) {
      return profile[c] < (1.0 - params.dip_fraction) * median[c];
    };
    while (lo < hi && !raw_dip(lo)) ++lo;
    while (hi > lo && !raw_dip(hi - 1)) --hi;
    if (lo >= hi) {
      lo = x;
      hi = end;
    }

    const int width = hi - lo;
    if (width >= params.min_width && width <= max_width)
      regions.push_back(ShadowRegion{frame_index, lo, hi, 0, -1});
    x = end;
  }
  return regions;
}

Image classical_baseline(const Image& img, BaselineMethod method,
                         const BaselineParams& params) {
  Image out(img.width, img.height);
  switch (method) {
    case BaselineMethod::VerticalEdge: {
      // Sobel-x style vertical edge kernel, negatives clamp to 0
      static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          int acc = 0;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int sx = std::clamp(x + dx, 0, img.width - 1);
              const int sy = std::clamp(y + dy, 0, img.height - 1);
              acc += kx[dy + 1][dx + 1] * img.at(sx, sy);
            }
          }
          out.at(x, y) = clamp_round_u8(static_cast<double>(acc));
        }
      }
      return out;
    }
    case BaselineMethod::RollingAvg: {
      require(params.window >= 1, Err::BadParams, "window must be >= 1");
      const int radius_lo = (params.window - 1) / 2;
      const int radius_hi = params.window / 2;
      for (int x = 0; x < img.width; ++x) {
        for (int y = 0; y < img.height; ++y) {
          int sum = 0, count = 0;
          for (int k = -radius_lo; k <= radius_hi; ++k) {
            const int sy = y + k;
            if (sy < 0 || sy >= img.height) continue;
            sum += img.at(x, sy);
            ++count;
          }
          out.at(x, y) = clamp_round_u8(static_cast<double>(sum) / count);
        }
      }
      return out;
    }
    case BaselineMethod::ValueScale: {
      require(params.alpha > 0.0, Err::BadParams, "alpha must be positive");
      for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.pixels[i] = clamp_round_u8(params.alpha * img.pixels[i]);
      return out;
    }
    case BaselineMethod::ColumnDiff: {
      for (int y = 0; y < img.height; ++y) {
        out.at(0, y) = 0;
        for (int x = 1; x < img.width; ++x) {
          const int d = img.at(x, y) - img.at(x - 1, y);
          out.at(x, y) = static_cast<std::uint8_t>(std::max(0, d));
        }
      }
      return out;
    }
    case BaselineMethod::BlurThreshold: {
      require(params.threshold >= 0 && params.threshold <= 255,
              Err::BadParams, "threshold outside 0..255");
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          int sum = 0, count = 0;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int sx = x + dx;
              const int sy = y + dy;
              if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height)
                continue;
              sum += img.at(sx, sy);
              ++count;
            }
          }
          const std::uint8_t blurred =
              clamp_round_u8(static_cast<double>(sum) / count);
          out.at(x, y) = blurred < params.threshold ? 0 : blurred;
        }
      }
      return out;
    }
  }
  fail(Err::BadParams, "unknown baseline method");
}

CocoImportResult import_coco_regions(const std::filesystem::path& json_path,
                                     const Stack& stack) {
  std::ifstream in(json_path);
  require(in.good(), Err::IoError, "cannot open " + json_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Err::Malformed, json_path.string() + ": " + e.what());
  }
  require(j.contains("images") && j["images"].is_array(), Err::Malformed,
          "missing images array");
  require(j.contains("annotations") && j["annotations"].is_array(),
          Err::Malformed, "missing annotations array");

  std::map<std::string, int> label_to_frame;
  for (std::size_t i = 0; i < stack.source_labels.size(); ++i)
    label_to_frame[stack.source_labels[i]] = static_cast<int>(i);

  std::map<std::int64_t, std::string> image_names;
  CocoImportResult result;
  try {
    for (const auto& image : j["images"]) {
      const auto name = image.at("file_name").get<std::string>();
      image_names[image.at("id").get<std::int64_t>()] = name;
      if (!label_to_frame.count(name)) result.unmatched_files.push_back(name);
    }
    for (const auto& ann : j["annotations"]) {
      const auto bbox = ann.at("bbox").get<std::vector<double>>();
      require(bbox.size() == 4, Err::Malformed, "bbox needs 4 entries");
      const auto id = ann.at("image_id").get<std::int64_t>();
      const auto name_it = image_names.find(id);
      require(name_it != image_names.end(), Err::Malformed,
              "annotation references unknown image id");
      const auto frame_it = label_to_frame.find(name_it->second);
      if (frame_it == label_to_frame.end()) continue;

      ShadowRegion r;
      r.frame_index = frame_it->second;
      r.col_start = std::max(0, static_cast<int>(std::lround(bbox[0])));
      r.col_end = std::min(stack.width(),
                           static_cast<int>(std::lround(bbox[0] + bbox[2])));
      r.row_start = std::max(0, static_cast<int>(std::lround(bbox[1])));
      r.row_end = std::min(stack.height(),
                           static_cast<int>(std::lround(bbox[1] + bbox[3])));
      require(r.col_start < r.col_end && r.row_start < r.row_end,
              Err::Malformed, "bbox degenerates to an empty region");
      result.regions.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Err::Malformed, json_path.string() + ": " + e.what());
  }
  require(!result.regions.empty(), Err::NoMatchingFrames,
          "no annotation matched a frame in the stack");
  return result;
}

namespace {

std::uint8_t suppress_pixel(std::uint8_t old, double alpha,
                            SuppressMode mode) {
  if (mode == SuppressMode::Verbatim)
    return clamp_round_u8(alpha * (128.0 - old) / 128.0);
  return clamp_round_u8(old + alpha * (255.0 - old) / 255.0);
}

// marks the union of region pixels so overlaps transform once
std::vector<char> region_mask(const Image& img,
                              std::span<const ShadowRegion> regions) {
  std::vector<char> mask(img.pixel_count(), 0);
  for (const ShadowRegion& r : regions) {
    r.validate(img.width, img.height);
    const int row_end = r.effective_row_end(img.height);
    for (int y = r.row_start; y < row_end; ++y)
      for (int x = r.col_start; x < r.col_end; ++x)
        mask[static_cast<std::size_t>(y) * img.width + x] = 1;
  }
  return mask;
}

}  // namespace

Image suppress_shadows(const Image& img,
                       std::span<const ShadowRegion> regions, double alpha,
                       SuppressMode mode) {
  require(alpha > 0.0, Err::BadParams, "alpha must be positive");
  const std::vector<char> mask = region_mask(img, regions);
  Image out = img;
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    if (mask[i]) out.pixels[i] = suppress_pixel(out.pixels[i], alpha, mode);
  return out;
}

Stack suppress_shadows(const Stack& stack,
                       std::span<const ShadowRegion> regions, double alpha,
                       SuppressMode mode) {
  Stack out;
  out.axial_res_um_per_px = stack.axial_res_um_per_px;
  out.source_labels = stack.source_labels;
  out.frames.resize(stack.frame_count());
  parallel_for(stack.frame_count(), [&](std::size_t f) {
    std::vector<ShadowRegion> mine;
    for (const ShadowRegion& r : regions)
      if (r.frame_index == static_cast<int>(f)) mine.push_back(r);
    out.frames[f] = suppress_shadows(stack.frames[f], mine, alpha, mode);
  });
  return out;
}

AlphaResult optimize_alpha(const Stack& stack,
                           std::span<const ShadowRegion> regions,
                           const AlphaSearch& search) {
  require(!regions.empty(), Err::NoRegions, "no shadow regions to optimize");
  require(search.alpha_min <= search.alpha_max && search.alpha_step > 0.0,
          Err::BadParams, "invalid alpha grid");
  require(search.w_mean >= 0 && search.w_std >= 0 && search.w_zero >= 0 &&
              search.w_mean + search.w_std + search.w_zero > 0,
          Err::BadParams, "at least one objective weight must be positive");
  require(!stack.empty(), Err::NoFrames, "empty stack");

  // The pixel update depends only on the old value, so the whole sweep
  // reduces to histogram remapping: full-stack histogram, histogram of the
  // region pixel union, remap the latter per alpha.
  std::array<std::uint64_t, 256> hist_all{};
  std::array<std::uint64_t, 256> hist_region{};
  for (std::size_t f = 0; f < stack.frame_count(); ++f) {
    const Image& img = stack.frames[f];
    std::vector<ShadowRegion> mine;
    for (const ShadowRegion& r : regions)
      if (r.frame_index == static_cast<int>(f)) mine.push_back(r);
    const std::vector<char> mask = region_mask(img, mine);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      ++hist_all[img.pixels[i]];
      if (mask[i]) ++hist_region[img.pixels[i]];
    }
  }

  const HistogramStats before = stats_from_histogram(hist_all);
  auto ratio_term = [](double after, double before_value) {
    return before_value > 0.0 ? after / before_value : 0.0;
  };

  const int grid_points = static_cast<int>(
      std::floor((search.alpha_max - search.alpha_min) / search.alpha_step +
                 1e-9)) + 1;

  AlphaResult result;
  result.trace.reserve(grid_points);
  double best_j = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_points; ++k) {
    const double alpha = search.alpha_min + k * search.alpha_step;
    std::array<std::uint64_t, 256> hist = hist_all;
    for (int v = 0; v < 256; ++v) hist[v] -= hist_region[v];
    for (int v = 0; v < 256; ++v) {
      const std::uint8_t nv =
          suppress_pixel(static_cast<std::uint8_t>(v), alpha, search.mode);
      hist[nv] += hist_region[v];
    }
    const HistogramStats after = stats_from_histogram(hist);
    const double j =
        search.w_zero * ratio_term(static_cast<double>(after.zero_count),
                                   static_cast<double>(before.zero_count)) +
        search.w_std * ratio_term(after.std_dev, before.std_dev) -
        search.w_mean * ratio_term(after.mean, before.mean);
    result.trace.push_back(
        {alpha, j, after.mean, after.std_dev, after.zero_count});
    if (j < best_j) {  // strict: smallest alpha wins ties
      best_j = j;
      result.alpha_star = alpha;
    }
  }
  return result;
}

}  // namespace octpost

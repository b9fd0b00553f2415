#include "octpost/image.hpp"

#include <numeric>

#include "octpost/parallel.hpp"

namespace octpost {

void validate_uniform(const Stack& stack) {
  for (std::size_t i = 1; i < stack.frames.size(); ++i) {
    require(stack.frames[i].same_size(stack.frames.front()),
            Err::DimensionMismatch,
            "frame " + std::to_string(i) + " is " +
                std::to_string(stack.frames[i].width) + "x" +
                std::to_string(stack.frames[i].height) + ", expected " +
                std::to_string(stack.width()) + "x" +
                std::to_string(stack.height()));
  }
}

std::uint64_t HistogramStats::total() const {
  return std::accumulate(histogram.begin(), histogram.end(),
                         std::uint64_t{0});
}

HistogramStats stats_from_histogram(const std::array<std::uint64_t, 256>& h) {
  HistogramStats s;
  s.histogram = h;
  s.zero_count = h[0];
  std::uint64_t n = 0;
  double sum = 0.0;
  for (int v = 0; v < 256; ++v) {
    n += h[v];
    sum += static_cast<double>(h[v]) * v;
  }
  if (n == 0) return s;
  s.mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (int v = 0; v < 256; ++v) {
    const double d = v - s.mean;
    var += static_cast<double>(h[v]) * d * d;
  }
  s.std_dev = std::sqrt(var / static_cast<double>(n));
  return s;
}

HistogramStats histogram_stats(const Image& image) {
  std::array<std::uint64_t, 256> h{};
  for (std::uint8_t p : image.pixels) ++h[p];
  return stats_from_histogram(h);
}

HistogramStats histogram_stats(const Stack& stack) {
  std::array<std::uint64_t, 256> h{};
  for (const Image& frame : stack.frames)
    for (std::uint8_t p : frame.pixels) ++h[p];
  return stats_from_histogram(h);
}

Stack group_average(const Stack& stack, int group_size) {
  require(group_size >= 1, Err::GroupMismatch, "group size must be positive");
  require(!stack.frames.empty(), Err::NoFrames, "empty stack");
  validate_uniform(stack);
  require(stack.frames.size() % static_cast<std::size_t>(group_size) == 0,
          Err::GroupMismatch,
          std::to_string(stack.frames.size()) + " frames not divisible by " +
              std::to_string(group_size));

  const std::size_t out_count = stack.frames.size() / group_size;
  Stack out;
  out.axial_res_um_per_px = stack.axial_res_um_per_px;
  out.frames.resize(out_count);
  out.source_labels.resize(out_count);

  const std::size_t n = stack.frames.front().pixel_count();
  const std::uint32_t half = static_cast<std::uint32_t>(group_size) / 2;
  parallel_for(out_count, [&](std::size_t g) {
    Image acc(stack.width(), stack.height());
    std::vector<std::uint32_t> sum(n, 0);
    for (int k = 0; k < group_size; ++k) {
      const Image& f = stack.frames[g * group_size + k];
      for (std::size_t i = 0; i < n; ++i) sum[i] += f.pixels[i];
    }
    for (std::size_t i = 0; i < n; ++i)
      acc.pixels[i] = static_cast<std::uint8_t>(
          (sum[i] + half) / static_cast<std::uint32_t>(group_size));
    out.frames[g] = std::move(acc);
    out.source_labels[g] = "group_" + std::to_string(g);
  });
  return out;
}

Image enface(const Stack& stack) {
  require(!stack.frames.empty(), Err::NoFrames, "empty stack");
  validate_uniform(stack);
  const int w = stack.width();
  const int h = stack.height();
  Image out(w, static_cast<int>(stack.frames.size()));
  parallel_for(stack.frames.size(), [&](std::size_t i) {
    const Image& frame = stack.frames[i];
    for (int x = 0; x < w; ++x) {
      std::uint64_t sum = 0;
      for (int y = 0; y < h; ++y) sum += frame.at(x, y);
      out.at(x, static_cast<int>(i)) =
          clamp_round_u8(static_cast<double>(sum) / h);
    }
  });
  return out;
}

Image roll_vertical(const Image& image, int offset) {
  if (offset == 0) return image;
  Image out(image.width, image.height, 0);
  const int h = image.height;
  for (int y = 0; y < h; ++y) {
    const int src = y - offset;
    if (src < 0 || src >= h) continue;
    std::copy_n(&image.pixels[static_cast<std::size_t>(src) * image.width],
                image.width,
                &out.pixels[static_cast<std::size_t>(y) * image.width]);
  }
  return out;
}

}  // namespace octpost

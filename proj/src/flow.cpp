#include "octpost/flow.hpp"

#include <algorithm>
#include <cmath>

#include "octpost/imgproc.hpp"

namespace octpost {

namespace {

struct FlowLevel {
  FloatImage u, v;
};

// One Lucas-Kanade update sweep at a single pyramid level. Gradients come
// from the warped target; window sums via running box filters keep the
// dense solve O(pixels) per iteration.
void lk_iterate(const FloatImage& ref, const FloatImage& target, FlowLevel& f,
                int window, int iterations) {
  const int w = ref.width;
  const int h = ref.height;
  const int radius = std::max(1, window / 2);
  const float max_step = static_cast<float>(radius);

  FloatImage warped(w, h), gx(w, h), gy(w, h);
  FloatImage sxx(w, h), sxy(w, h), syy(w, h), sxt(w, h), syt(w, h);
  FloatImage scratch(w, h);

  for (int iter = 0; iter < iterations; ++iter) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        warped.at(x, y) = sample_clamped(target, x + f.u.at(x, y),
                                         y + f.v.at(x, y));
    gradients(warped, gx, gy);
    for (std::size_t i = 0; i < warped.px.size(); ++i) {
      const float it = warped.px[i] - ref.px[i];
      const float x = gx.px[i];
      const float y = gy.px[i];
      sxx.px[i] = x * x;
      sxy.px[i] = x * y;
      syy.px[i] = y * y;
      sxt.px[i] = x * it;
      syt.px[i] = y * it;
    }
    box_sum_inplace(sxx, radius, scratch);
    box_sum_inplace(sxy, radius, scratch);
    box_sum_inplace(syy, radius, scratch);
    box_sum_inplace(sxt, radius, scratch);
    box_sum_inplace(syt, radius, scratch);

    for (std::size_t i = 0; i < f.u.px.size(); ++i) {
      const double a = sxx.px[i];
      const double b = sxy.px[i];
      const double c = syy.px[i];
      const double det = a * c - b * b;
      // skip textureless windows (aperture-degenerate systems)
      if (det < 1e-3 || a + c < 1e-3) continue;
      const double du = (-c * sxt.px[i] + b * syt.px[i]) / det;
      const double dv = (b * sxt.px[i] - a * syt.px[i]) / det;
      f.u.px[i] += std::clamp(static_cast<float>(du), -max_step, max_step);
      f.v.px[i] += std::clamp(static_cast<float>(dv), -max_step, max_step);
    }
    // mild spatial coherence between sweeps
    f.u = box_blur3(f.u);
    f.v = box_blur3(f.v);
  }
}

}  // namespace

FlowField optical_flow(const Image& reference, const Image& target,
                       const FlowParams& params) {
  require(reference.same_size(target), Err::DimensionMismatch,
          "flow needs equal dimensions");
  require(params.levels >= 1 && params.window >= 3 && params.iterations >= 1,
          Err::BadParams, "invalid flow parameters");

  std::vector<FloatImage> ref_pyr{to_float(reference)};
  std::vector<FloatImage> tgt_pyr{to_float(target)};
  for (int l = 1; l < params.levels; ++l) {
    if (ref_pyr.back().width < 2 * params.window ||
        ref_pyr.back().height < 2 * params.window)
      break;
    ref_pyr.push_back(downsample_half(ref_pyr.back()));
    tgt_pyr.push_back(downsample_half(tgt_pyr.back()));
  }

  FlowLevel level;
  level.u = FloatImage(ref_pyr.back().width, ref_pyr.back().height);
  level.v = FloatImage(ref_pyr.back().width, ref_pyr.back().height);
  for (int l = static_cast<int>(ref_pyr.size()) - 1; l >= 0; --l) {
    if (level.u.width != ref_pyr[l].width ||
        level.u.height != ref_pyr[l].height) {
      level.u = resize_bilinear(level.u, ref_pyr[l].width, ref_pyr[l].height);
      level.v = resize_bilinear(level.v, ref_pyr[l].width, ref_pyr[l].height);
      for (float& x : level.u.px) x *= 2.0f;
      for (float& x : level.v.px) x *= 2.0f;
    }
    lk_iterate(ref_pyr[l], tgt_pyr[l], level, params.window,
               params.iterations);
  }

  FlowField flow(reference.width, reference.height);
  flow.u = std::move(level.u.px);
  flow.v = std::move(level.v.px);
  return flow;
}

Image warp_flow(const Image& img, const FlowField& flow) {
  require(img.width == flow.width && img.height == flow.height,
          Err::DimensionMismatch, "flow field size differs from image");
  const FloatImage src = to_float(img);
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(x, y) = clamp_round_u8(
          sample_zero(src, x + flow.u[flow.index(x, y)],
                      y + flow.v[flow.index(x, y)]));
  return out;
}

}  // namespace octpost

#include "octpost/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "octpost/imgproc.hpp"
#include "octpost/parallel.hpp"
#include "octpost/rng.hpp"

namespace octpost {

namespace {

// Piecewise-linear intensity profile down a column: constant inside each
// layer, 2 px ramps across boundaries.
struct DepthProfile {
  std::vector<double> node_depth;
  std::vector<double> node_value;

  double eval(double y) const {
    if (y <= node_depth.front()) return node_value.front();
    if (y >= node_depth.back()) return node_value.back();
    auto it = std::upper_bound(node_depth.begin(), node_depth.end(), y);
    const std::size_t hi = static_cast<std::size_t>(it - node_depth.begin());
    const std::size_t lo = hi - 1;
    const double span = node_depth[hi] - node_depth[lo];
    if (span <= 1e-12) return node_value[hi];
    const double t = (y - node_depth[lo]) / span;
    return node_value[lo] + t * (node_value[hi] - node_value[lo]);
  }
};

DepthProfile make_profile(const std::vector<double>& boundary_depth,
                          const std::vector<PhantomLayer>& layers) {
  DepthProfile p;
  constexpr double kRamp = 1.0;  // half-width of the 2 px boundary ramp
  double prev_value = 0.0;       // vitreous above, dark
  for (std::size_t k = 0; k < boundary_depth.size(); ++k) {
    const double next_value =
        k < layers.size() ? static_cast<double>(layers[k].base_intensity)
                          : 0.0;  // below the slab, dark again
    p.node_depth.push_back(boundary_depth[k] - kRamp);
    p.node_value.push_back(prev_value);
    p.node_depth.push_back(boundary_depth[k] + kRamp);
    p.node_value.push_back(next_value);
    prev_value = next_value;
  }
  // guard against inverted node order from sub-ramp-width layers
  for (std::size_t i = 1; i < p.node_depth.size(); ++i)
    p.node_depth[i] = std::max(p.node_depth[i], p.node_depth[i - 1]);
  return p;
}

int jitter_offset(const PhantomJitter& jitter, int frame, Rng& rng) {
  if (!jitter.offsets.empty())
    return jitter.offsets[static_cast<std::size_t>(frame) %
                          jitter.offsets.size()];
  if (jitter.step_every > 0)
    return jitter.step_px * (frame / jitter.step_every);
  if (jitter.random_max_px > 0)
    return rng.uniform_int(-jitter.random_max_px, jitter.random_max_px);
  return 0;
}

Homography random_warp(const PhantomWarpSpec& w, double cx, double cy,
                       Rng& rng) {
  const double dx = rng.uniform(-w.max_translate_px, w.max_translate_px);
  const double dy = rng.uniform(-w.max_translate_px, w.max_translate_px);
  const double rot = rng.uniform(-w.max_rotate_deg, w.max_rotate_deg) *
                     3.14159265358979323846 / 180.0;
  const double scale = 1.0 + rng.uniform(-w.max_scale_delta, w.max_scale_delta);
  const double px = rng.uniform(-w.max_perspective, w.max_perspective);
  const double py = rng.uniform(-w.max_perspective, w.max_perspective);

  Homography m;
  m.m = {scale * std::cos(rot), -scale * std::sin(rot), dx,
         scale * std::sin(rot), scale * std::cos(rot), dy,
         px, py, 1.0};
  // conjugate with the center shift so the distortion pivots mid-frame
  const Homography to_center = Homography::translation(-cx, -cy);
  const Homography from_center = Homography::translation(cx, cy);
  return from_center.compose(m).compose(to_center).normalized();
}

FloatImage warp_float(const FloatImage& src, const Homography& h) {
  const Homography inv = h.inverse();
  FloatImage out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const Point p = inv.apply({static_cast<double>(x),
                                 static_cast<double>(y)});
      out.at(x, y) = sample_zero(src, static_cast<float>(p.x),
                                 static_cast<float>(p.y));
    }
  }
  return out;
}

// Maps a per-column boundary curve through H and resamples it back onto
// integer output columns.
std::vector<double> map_boundary(const std::vector<double>& depth,
                                 const Homography& h, int width) {
  std::vector<std::pair<double, double>> mapped;
  mapped.reserve(depth.size());
  for (std::size_t x = 0; x < depth.size(); ++x) {
    const Point p = h.apply({static_cast<double>(x), depth[x]});
    mapped.emplace_back(p.x, p.y);
  }
  std::sort(mapped.begin(), mapped.end());
  std::vector<double> out(width, std::nan(""));
  std::size_t seg = 0;
  for (int x = 0; x < width; ++x) {
    const double fx = static_cast<double>(x);
    while (seg + 1 < mapped.size() && mapped[seg + 1].first < fx) ++seg;
    if (seg + 1 >= mapped.size()) break;
    const auto& [x0, y0] = mapped[seg];
    const auto& [x1, y1] = mapped[seg + 1];
    if (fx < x0 || fx > x1 || x1 - x0 < 1e-9) continue;
    const double t = (fx - x0) / (x1 - x0);
    out[x] = y0 + t * (y1 - y0);
  }
  return out;
}

}  // namespace

std::vector<PhantomLayer> PhantomSpec::default_layers() {
  return {{"RNFL", 20, 190},    {"GCL+IPL", 53, 90}, {"INL", 25, 150},
          {"OPL", 21, 70},      {"ONL", 52, 120},    {"ELM", 12, 210},
          {"PR", 81, 160}};
}

void PhantomSpec::validate() const {
  require(width >= 8 && height >= 8, Err::SpecInvalid,
          "phantom frames must be at least 8x8");
  require(frame_count >= 1, Err::SpecInvalid, "frame_count must be >= 1");
  require(speckle_sigma >= 0.0, Err::SpecInvalid, "speckle sigma < 0");
  require(ilm_depth_px >= 0.0, Err::SpecInvalid, "ilm depth < 0");
  const auto& l = layers.empty() ? default_layers() : layers;
  double total = ilm_depth_px;
  for (const auto& layer : l) {
    require(layer.thickness_px > 0, Err::SpecInvalid,
            "layer thickness must be positive: " + layer.name);
    require(layer.base_intensity >= 0 && layer.base_intensity <= 255,
            Err::SpecInvalid, "layer intensity outside 0..255");
    total += layer.thickness_px;
  }
  require(total < height, Err::SpecInvalid,
          "layer stack does not fit the frame height");
  for (const auto& s : shadows) {
    require(s.attenuation > 0.0 && s.attenuation <= 1.0, Err::SpecInvalid,
            "shadow attenuation must be in (0, 1]");
    require(s.col_start >= 0 && s.width > 0 && s.col_start + s.width <= width,
            Err::SpecInvalid, "shadow interval outside frame");
  }
}

std::vector<ShadowRegion> GroundTruth::regions_for_frame(int frame) const {
  std::vector<ShadowRegion> out;
  for (const ShadowRegion& r : shadow_regions)
    if (r.frame_index == frame) out.push_back(r);
  return out;
}

std::pair<Stack, GroundTruth> generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const std::vector<PhantomLayer> layers =
      spec.layers.empty() ? PhantomSpec::default_layers() : spec.layers;

  // boundary names: ILM, inter-layer interfaces, slab end
  std::vector<std::string> names;
  names.push_back("ILM");
  for (std::size_t k = 0; k + 1 < layers.size(); ++k)
    names.push_back(layers[k].name + "/" + layers[k + 1].name);
  names.push_back(layers.back().name + "-end");

  const int n_boundaries = static_cast<int>(layers.size()) + 1;
  const int w = spec.width;
  const int h = spec.height;

  Stack stack;
  stack.axial_res_um_per_px = spec.axial_res_um_per_px;
  stack.frames.resize(spec.frame_count);
  stack.source_labels.resize(spec.frame_count);

  GroundTruth gt;
  gt.boundary_names = names;
  gt.boundaries.resize(spec.frame_count);
  gt.offsets.assign(spec.frame_count, 0);
  gt.warps.assign(spec.frame_count, Homography::identity());

  std::vector<std::vector<ShadowRegion>> frame_regions(spec.frame_count);

  parallel_for(static_cast<std::size_t>(spec.frame_count), [&](std::size_t f) {
    Rng rng = Rng::stream(spec.seed, f);

    // draw order is fixed: jitter, warp, then per-pixel speckle
    const int offset = jitter_offset(spec.jitter, static_cast<int>(f), rng);
    Homography warp = Homography::identity();
    if (spec.warp.has_value())
      warp = random_warp(*spec.warp, (w - 1) / 2.0, (h - 1) / 2.0, rng);

    // boundary depths per column, jitter applied
    std::vector<std::vector<double>> bounds(n_boundaries,
                                            std::vector<double>(w));
    for (int x = 0; x < w; ++x) {
      double d = spec.ilm_depth_px + spec.tilt_px_per_col * x + offset;
      bounds[0][x] = d;
      for (std::size_t k = 0; k < layers.size(); ++k) {
        d += layers[k].thickness_px;
        bounds[k + 1][x] = d;
      }
    }

    FloatImage img(w, h);
    for (int x = 0; x < w; ++x) {
      std::vector<double> column_bounds(n_boundaries);
      for (int k = 0; k < n_boundaries; ++k) column_bounds[k] = bounds[k][x];
      const DepthProfile profile = make_profile(column_bounds, layers);
      for (int y = 0; y < h; ++y)
        img.at(x, y) = static_cast<float>(profile.eval(y));
    }

    if (spec.warp.has_value()) {
      img = warp_float(img, warp);
      for (auto& b : bounds) b = map_boundary(b, warp, w);
    }

    for (const PhantomShadowSpec& s : spec.shadows) {
      for (int x = s.col_start; x < s.col_start + s.width; ++x)
        for (int y = 0; y < h; ++y)
          img.at(x, y) = static_cast<float>(img.at(x, y) * s.attenuation);
      frame_regions[f].push_back(ShadowRegion{static_cast<int>(f),
                                              s.col_start,
                                              s.col_start + s.width, 0, -1});
    }

    if (spec.speckle_sigma > 0.0) {
      const double sigma = spec.speckle_sigma;
      const double mean_fix = -0.5 * sigma * sigma;  // E[factor] = 1
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          img.at(x, y) = static_cast<float>(
              img.at(x, y) * std::exp(sigma * rng.normal() + mean_fix));
    }

    stack.frames[f] = to_u8(img);
    stack.source_labels[f] = "phantom_" + std::to_string(f);
    gt.offsets[f] = offset;
    gt.warps[f] = warp;
    gt.boundaries[f] = std::move(bounds);
  });

  for (auto& regions : frame_regions)
    for (ShadowRegion& r : regions) gt.shadow_regions.push_back(r);
  return {std::move(stack), std::move(gt)};
}

namespace {

using nlohmann::json;

PhantomJitter jitter_from_json(const json& j) {
  PhantomJitter out;
  if (j.contains("offsets"))
    out.offsets = j["offsets"].get<std::vector<int>>();
  out.step_every = j.value("step_every", 0);
  out.step_px = j.value("step_px", 0);
  out.random_max_px = j.value("random_max_px", 0);
  return out;
}

}  // namespace

PhantomSpec phantom_spec_from_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Err::Malformed, path + ": " + e.what());
  }
  try {
    PhantomSpec spec;
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);
    spec.frame_count = j.value("frame_count", spec.frame_count);
    spec.ilm_depth_px = j.value("ilm_depth_px", spec.ilm_depth_px);
    spec.tilt_px_per_col = j.value("tilt_px_per_col", spec.tilt_px_per_col);
    spec.speckle_sigma = j.value("speckle_sigma", spec.speckle_sigma);
    spec.seed = j.value("seed", spec.seed);
    spec.axial_res_um_per_px =
        j.value("axial_res_um_per_px", spec.axial_res_um_per_px);
    if (j.contains("layers")) {
      for (const auto& l : j["layers"])
        spec.layers.push_back({l.at("name").get<std::string>(),
                               l.at("thickness_px").get<double>(),
                               l.at("intensity").get<int>()});
    }
    if (j.contains("jitter")) spec.jitter = jitter_from_json(j["jitter"]);
    if (j.contains("warp")) {
      PhantomWarpSpec w;
      const auto& jw = j["warp"];
      w.max_translate_px = jw.value("max_translate_px", 0.0);
      w.max_rotate_deg = jw.value("max_rotate_deg", 0.0);
      w.max_scale_delta = jw.value("max_scale_delta", 0.0);
      w.max_perspective = jw.value("max_perspective", 0.0);
      spec.warp = w;
    }
    if (j.contains("shadows")) {
      for (const auto& s : j["shadows"])
        spec.shadows.push_back({s.at("col_start").get<int>(),
                                s.at("width").get<int>(),
                                s.at("attenuation").get<double>()});
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    fail(Err::Malformed, path + ": " + e.what());
  }
}

void write_ground_truth_json(const GroundTruth& gt, const std::string& path) {
  json j;
  j["boundary_names"] = gt.boundary_names;
  j["offsets"] = gt.offsets;
  json warps = json::array();
  for (const Homography& h : gt.warps)
    warps.push_back(std::vector<double>(h.m.begin(), h.m.end()));
  j["warps"] = std::move(warps);
  json regions = json::array();
  for (const ShadowRegion& r : gt.shadow_regions)
    regions.push_back({{"frame_index", r.frame_index},
                       {"col_start", r.col_start},
                       {"col_end", r.col_end},
                       {"row_start", r.row_start},
                       {"row_end", r.row_end}});
  j["shadow_regions"] = std::move(regions);
  json frames = json::array();
  for (const auto& frame : gt.boundaries) {
    json per_boundary = json::array();
    for (const auto& b : frame) {
      json cols = json::array();
      for (double d : b)
        cols.push_back(std::isnan(d) ? json(nullptr) : json(d));
      per_boundary.push_back(std::move(cols));
    }
    frames.push_back(std::move(per_boundary));
  }
  j["boundaries"] = std::move(frames);

  std::ofstream out(path);
  require(out.good(), Err::IoError, "cannot write " + path);
  out << j.dump() << "\n";
}

GroundTruth read_ground_truth_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Err::Malformed, path + ": " + e.what());
  }
  try {
    GroundTruth gt;
    gt.boundary_names = j.at("boundary_names").get<std::vector<std::string>>();
    gt.offsets = j.at("offsets").get<std::vector<int>>();
    for (const auto& w : j.at("warps")) {
      Homography h;
      const auto v = w.get<std::vector<double>>();
      require(v.size() == 9, Err::Malformed, "warp matrix needs 9 entries");
      std::copy(v.begin(), v.end(), h.m.begin());
      gt.warps.push_back(h);
    }
    for (const auto& r : j.at("shadow_regions"))
      gt.shadow_regions.push_back({r.at("frame_index").get<int>(),
                                   r.at("col_start").get<int>(),
                                   r.at("col_end").get<int>(),
                                   r.value("row_start", 0),
                                   r.value("row_end", -1)});
    for (const auto& frame : j.at("boundaries")) {
      std::vector<std::vector<double>> per_boundary;
      for (const auto& b : frame) {
        std::vector<double> cols;
        for (const auto& d : b)
          cols.push_back(d.is_null() ? std::nan("") : d.get<double>());
        per_boundary.push_back(std::move(cols));
      }
      gt.boundaries.push_back(std::move(per_boundary));
    }
    return gt;
  } catch (const json::exception& e) {
    fail(Err::Malformed, path + ": " + e.what());
  }
}

}  // namespace octpost

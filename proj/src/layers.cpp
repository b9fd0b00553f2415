#include "octpost/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace octpost {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Run {
  int start = 0;
  int end = 0;  // inclusive
  double center() const { return 0.5 * (start + end); }
  int length() const { return end - start + 1; }
};

std::vector<Run> column_runs(const Image& mask, int x) {
  std::vector<Run> runs;
  int y = 0;
  while (y < mask.height) {
    if (mask.at(x, y) == 0) {
      ++y;
      continue;
    }
    Run run{y, y};
    while (run.end + 1 < mask.height && mask.at(x, run.end + 1) != 0)
      ++run.end;
    runs.push_back(run);
    y = run.end + 1;
  }
  return runs;
}

// Greedy nearest-depth assignment of runs to reference boundary depths;
// each run and boundary used at most once, jumps beyond max_jump rejected.
std::vector<double> assign_by_proximity(const std::vector<Run>& runs,
                                        const std::vector<double>& reference,
                                        double max_jump) {
  const int b = static_cast<int>(reference.size());
  std::vector<double> out(b, kNan);
  struct Cand {
    double cost;
    int run;
    int boundary;
  };
  std::vector<Cand> cands;
  for (int r = 0; r < static_cast<int>(runs.size()); ++r) {
    for (int k = 0; k < b; ++k) {
      if (std::isnan(reference[k])) continue;
      const double cost = std::abs(runs[r].center() - reference[k]);
      if (cost <= max_jump) cands.push_back({cost, r, k});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b2) {
    if (a.cost != b2.cost) return a.cost < b2.cost;
    if (a.boundary != b2.boundary) return a.boundary < b2.boundary;
    return a.run < b2.run;
  });
  std::vector<char> run_used(runs.size(), 0), boundary_used(b, 0);
  for (const Cand& c : cands) {
    if (run_used[c.run] || boundary_used[c.boundary]) continue;
    run_used[c.run] = 1;
    boundary_used[c.boundary] = 1;
    out[c.boundary] = runs[c.run].center();
  }
  return out;
}

}  // namespace

std::vector<std::string> BoundaryMap::default_names() {
  return {"ILM",     "RNFL/GCL", "GCL+IPL/INL", "INL/OPL",
          "OPL/ONL", "ONL/ELM",  "ELM/PR",      "PR-end"};
}

BoundaryMap make_boundary_map(std::vector<std::string> names,
                              std::vector<std::vector<double>> depth) {
  require(!depth.empty(), Err::NoBoundaries, "no boundary curves given");
  BoundaryMap map;
  map.width = static_cast<int>(depth.front().size());
  for (const auto& d : depth)
    require(static_cast<int>(d.size()) == map.width, Err::DimensionMismatch,
            "boundary curves differ in length");
  if (names.empty())
    for (std::size_t i = 0; i < depth.size(); ++i)
      names.push_back("boundary_" + std::to_string(i));
  require(names.size() == depth.size(), Err::BadParams,
          "boundary name count differs from curve count");
  map.names = std::move(names);
  map.depth = std::move(depth);
  return map;
}

BoundaryMap trace_boundaries(const Image& mask, int expected_count,
                             std::vector<std::string> names) {
  require(expected_count >= 2, Err::BadParams, "expected_count must be >= 2");
  require(!mask.empty(), Err::NoBoundaries, "empty mask");

  std::vector<std::vector<Run>> runs(mask.width);
  bool any = false;
  int filled_looking = 0, multi_run_cols = 0;
  for (int x = 0; x < mask.width; ++x) {
    runs[x] = column_runs(mask, x);
    if (!runs[x].empty()) any = true;
    if (runs[x].size() >= 2) {
      ++multi_run_cols;
      const int span = runs[x].back().end - runs[x].front().start + 1;
      for (const Run& r : runs[x])
        if (r.length() > std::max(4.0, 0.25 * span)) {
          ++filled_looking;
          break;
        }
    }
  }
  require(any, Err::NoBoundaries, "mask has no foreground pixels");
  require(multi_run_cols == 0 || filled_looking * 2 <= multi_run_cols,
          Err::FilledMask,
          "mask looks like filled regions, not boundary lines");

  BoundaryMap map;
  map.width = mask.width;
  map.depth.assign(expected_count,
                   std::vector<double>(mask.width, kNan));
  if (names.empty()) {
    if (expected_count ==
        static_cast<int>(BoundaryMap::default_names().size()))
      names = BoundaryMap::default_names();
    else
      for (int i = 0; i < expected_count; ++i)
        names.push_back("boundary_" + std::to_string(i));
  }
  require(static_cast<int>(names.size()) == expected_count, Err::BadParams,
          "boundary name count differs from expected_count");
  map.names = std::move(names);

  // exact-count columns anchor the assignment
  std::vector<char> anchored(mask.width, 0);
  for (int x = 0; x < mask.width; ++x) {
    if (static_cast<int>(runs[x].size()) != expected_count) continue;
    for (int k = 0; k < expected_count; ++k)
      map.depth[k][x] = runs[x][k].center();
    anchored[x] = 1;
  }
  bool has_anchor = false;
  for (char a : anchored) has_anchor |= a != 0;
  require(has_anchor, Err::NoBoundaries,
          "no column carries the expected boundary count");

  // remaining columns match runs to the nearest anchored column's depths
  constexpr double kMaxJump = 15.0;
  std::vector<int> nearest_anchor(mask.width, -1);
  {
    int last = -1;
    for (int x = 0; x < mask.width; ++x) {
      if (anchored[x]) last = x;
      nearest_anchor[x] = last;
    }
    last = -1;
    for (int x = mask.width - 1; x >= 0; --x) {
      if (anchored[x]) last = x;
      if (last >= 0 &&
          (nearest_anchor[x] < 0 ||
           last - x < x - nearest_anchor[x]))
        nearest_anchor[x] = last;
    }
  }
  for (int x = 0; x < mask.width; ++x) {
    if (anchored[x] || runs[x].empty()) continue;
    std::vector<double> reference(expected_count, kNan);
    const int a = nearest_anchor[x];
    for (int k = 0; k < expected_count; ++k) reference[k] = map.depth[k][a];
    const std::vector<double> assigned =
        assign_by_proximity(runs[x], reference, kMaxJump);
    for (int k = 0; k < expected_count; ++k) map.depth[k][x] = assigned[k];
  }
  return map;
}

BoundaryMap interpolate_gaps(const BoundaryMap& map, int max_gap_cols) {
  require(max_gap_cols >= 0, Err::BadParams, "max_gap_cols must be >= 0");
  BoundaryMap out = map;
  out.unfilled.clear();
  for (int k = 0; k < out.boundary_count(); ++k) {
    std::vector<double>& d = out.depth[k];
    int prev_valid = -1;
    int x = 0;
    while (x < out.width) {
      if (!std::isnan(d[x])) {
        prev_valid = x;
        ++x;
        continue;
      }
      int end = x;
      while (end < out.width && std::isnan(d[end])) ++end;
      const int gap = end - x;
      const bool interior = prev_valid >= 0 && end < out.width;
      if (interior && gap <= max_gap_cols) {
        const double d0 = d[prev_valid];
        const double d1 = d[end];
        const int span = end - prev_valid;
        for (int c = x; c < end; ++c)
          d[c] = d0 + (d1 - d0) * (c - prev_valid) / span;
      } else {
        out.unfilled.push_back({k, x, end});
      }
      x = end;
    }
  }
  return out;
}

ThicknessReport compute_thickness(const BoundaryMap& map,
                                  double axial_res_um_per_px) {
  require(map.boundary_count() >= 2, Err::BadParams,
          "need at least two boundaries");
  require(axial_res_um_per_px > 0, Err::BadParams,
          "axial resolution must be positive");

  // Table-style layer names when the boundary list is the default one
  const bool default_scheme = map.names == BoundaryMap::default_names();
  static const std::vector<std::string> kDefaultLayerNames = {
      "RNFL", "GCL+IPL", "INL", "OPL", "ONL", "ELM", "PR"};

  auto layer_stats = [&](int upper, int lower,
                         const std::string& name) -> LayerThickness {
    LayerThickness t;
    t.name = name;
    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    for (int x = 0; x < map.width; ++x) {
      const double a = map.depth[upper][x];
      const double b = map.depth[lower][x];
      if (std::isnan(a) || std::isnan(b)) continue;
      const double d = b - a;
      sum += d;
      sum_sq += d * d;
      ++n;
    }
    require(n > 0, Err::NoOverlapColumns,
            "no column has both boundaries of layer " + name);
    t.columns = n;
    t.mean_px = sum / n;
    const double var = std::max(0.0, sum_sq / n - t.mean_px * t.mean_px);
    t.std_px = std::sqrt(var);
    t.mean_um = t.mean_px * axial_res_um_per_px;
    return t;
  };

  ThicknessReport report;
  report.axial_res_um_per_px = axial_res_um_per_px;
  for (int k = 0; k + 1 < map.boundary_count(); ++k) {
    const std::string name =
        default_scheme && k < static_cast<int>(kDefaultLayerNames.size())
            ? kDefaultLayerNames[k]
            : map.names[k] + ".." + map.names[k + 1];
    report.layers.push_back(layer_stats(k, k + 1, name));
  }
  report.full_span = layer_stats(0, map.boundary_count() - 1, "total");
  return report;
}

void compare_reference(
    ThicknessReport& report,
    const std::vector<std::pair<std::string, double>>& reference) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [name, um] : reference) {
    require(um > 0, Err::BadParams, "reference thickness must be positive");
    LayerThickness* target = nullptr;
    for (LayerThickness& layer : report.layers)
      if (layer.name == name) target = &layer;
    if (report.full_span.name == name) target = &report.full_span;
    require(target != nullptr, Err::UnknownLayer,
            "reference names unknown layer " + name);
    target->percent_error = std::abs(target->mean_um - um) / um * 100.0;
    if (target != &report.full_span) {
      sum += target->percent_error;
      ++n;
    }
  }
  if (n > 0) report.mean_abs_rel_error = sum / n;
}

Image render_boundary_mask(const BoundaryMap& map, int height) {
  require(map.width >= 1 && height >= 1, Err::BadParams,
          "mask dimensions must be positive");
  Image out(map.width, height);
  for (const auto& boundary : map.depth) {
    for (int x = 0; x < map.width; ++x) {
      if (std::isnan(boundary[x])) continue;
      const int y = static_cast<int>(std::floor(boundary[x] + 0.5));
      if (y >= 0 && y < height) out.at(x, y) = 255;
    }
  }
  return out;
}

}  // namespace octpost

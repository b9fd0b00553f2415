#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "octpost/homography.hpp"
#include "octpost/image.hpp"
#include "octpost/shadow_region.hpp"

namespace octpost {

struct PhantomLayer {
  std::string name;
  double thickness_px = 0.0;
  int base_intensity = 0;  // 0..255
};

struct PhantomShadowSpec {
  int col_start = 0;
  int width = 0;
  double attenuation = 1.0;  // multiplicative factor in (0, 1]
};

// Per-frame random perspective distortion bounds (Case 2 conditions).
struct PhantomWarpSpec {
  double max_translate_px = 0.0;
  double max_rotate_deg = 0.0;
  double max_scale_delta = 0.0;
  double max_perspective = 0.0;  // bound on the projective row entries
};

// Vertical jitter (Case 1 conditions): explicit offsets win, then a step
// schedule, then uniform random offsets in [-random_max_px, random_max_px].
struct PhantomJitter {
  std::vector<int> offsets;
  int step_every = 0;
  int step_px = 0;
  int random_max_px = 0;
};

struct PhantomSpec {
  int width = 512;
  int height = 512;
  int frame_count = 3;
  std::vector<PhantomLayer> layers;  // empty selects the default table
  double ilm_depth_px = 120.0;
  double tilt_px_per_col = 0.0;
  PhantomJitter jitter;
  std::optional<PhantomWarpSpec> warp;
  std::vector<PhantomShadowSpec> shadows;
  double speckle_sigma = 0.0;  // multiplicative log-normal strength
  std::uint64_t seed = 0;
  double axial_res_um_per_px = kDefaultAxialResUmPerPx;

  // Mouse retina rows (RNFL..PR) with intensities giving every adjacent
  // boundary a strong edge.
  static std::vector<PhantomLayer> default_layers();

  void validate() const;  // SpecInvalid on violation
};

struct GroundTruth {
  std::vector<std::string> boundary_names;  // layers.size() + 1 entries
  // boundaries[frame][boundary][column], NaN where the boundary left the frame
  std::vector<std::vector<std::vector<double>>> boundaries;
  std::vector<int> offsets;          // applied vertical jitter per frame
  std::vector<Homography> warps;     // identity when no warp was applied
  std::vector<ShadowRegion> shadow_regions;

  std::vector<ShadowRegion> regions_for_frame(int frame) const;
};

// Deterministic: identical spec and seed give bit-identical stacks, on any
// thread count (per-frame counter-derived RNG streams).
std::pair<Stack, GroundTruth> generate_phantom(const PhantomSpec& spec);

// JSON bindings for the CLI spec file and ground_truth.json.
PhantomSpec phantom_spec_from_json_file(const std::string& path);
void write_ground_truth_json(const GroundTruth& gt, const std::string& path);
GroundTruth read_ground_truth_json(const std::string& path);

}  // namespace octpost

#pragma once

#include <optional>
#include <string>

#include "octpost/phantom.hpp"
#include "octpost/registration.hpp"
#include "octpost/shadow.hpp"

namespace octpost {

inline constexpr const char* kVersion = "0.1.0";

// Full run configuration; a JSON config file populates it and CLI flags
// override individual fields.
struct PipelineConfig {
  // input: exactly one of stack_dir / phantom_spec_path must be set
  std::string stack_dir;
  std::string phantom_spec_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  bool registration_enabled = true;
  RegMethod method = RegMethod::Hybrid;
  KeypointAlgo algo = KeypointAlgo::Orb;
  std::vector<int> refs;
  bool auto_refs = false;

  bool shadow_enabled = true;
  std::string shadow_source = "auto";  // auto | coco:<path> | ground_truth
  double alpha = 1.3;
  bool alpha_opt = false;
  AlphaSearch alpha_search;
  SuppressMode mode = SuppressMode::ComplementBoost;

  bool thickness_enabled = true;
  std::string mask_dir;  // empty + phantom input = ground-truth masks
  double axial_res_um_per_px = kDefaultAxialResUmPerPx;
  std::string reference_csv;

  bool emit_enface = true;
  bool emit_metrics = true;
  bool emit_stacks = true;
};

// ConfigInvalid names the offending field.
PipelineConfig pipeline_config_from_json_file(const std::string& path);
void validate_config(const PipelineConfig& config);

// Runs load/generate -> two-pass registration -> shadow detect + suppress
// -> enface + metrics -> thickness, writing every artifact plus
// run_manifest.json under output_dir. Per-stage failures are recorded in
// the manifest and independent stages continue. Returns 0 when every
// enabled stage succeeded.
int run_pipeline(const PipelineConfig& config);

}  // namespace octpost

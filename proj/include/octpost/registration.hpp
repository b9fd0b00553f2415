#pragma once

#include <string>
#include <vector>

#include "octpost/flow.hpp"
#include "octpost/homography.hpp"
#include "octpost/ilm.hpp"
#include "octpost/image.hpp"
#include "octpost/keypoints.hpp"
#include "octpost/metrics.hpp"

namespace octpost {

enum class RegMethod { Height, Keypoint, Flow, Hybrid };

const char* reg_method_name(RegMethod m);
RegMethod reg_method_from_name(const std::string& name);  // BadParams
KeypointAlgo keypoint_algo_from_name(const std::string& name);
const char* keypoint_algo_name(KeypointAlgo a);

struct RegistrationPlan {
  std::vector<int> pass1_refs;  // sorted; empty skips pass 1
  int pass2_ref = -1;           // -1 selects floor(frame_count / 2)
  RegMethod method = RegMethod::Hybrid;
  KeypointAlgo algo = KeypointAlgo::Orb;
  KeypointParams keypoint_params;
  FlowParams flow_params;
  IlmParams ilm_params;
  double match_ratio = 0.75;
  int ransac_iterations = 2000;
  double ransac_tol_px = 2.0;
  std::uint64_t seed = 0;
};

struct FrameRegRecord {
  int frame_index = 0;
  std::string method;
  int reference_index = 0;  // the pass-2 reference correlation is taken against
  double correlation = 0.0;
  std::string status;  // "ok", "reference", or "failed:<Err>"
};

struct RegistrationReport {
  std::vector<FrameRegRecord> rows;
  MetricReport correlation;
};

// Two-pass registration: every frame aligns to its nearest pass-1 reference
// (smaller index on ties), then everything aligns to the pass-2 central
// reference. Frames that fail a pass carry through unmodified and are
// flagged in the report.
std::pair<Stack, RegistrationReport> register_stack(
    const Stack& stack, const RegistrationPlan& plan);

}  // namespace octpost

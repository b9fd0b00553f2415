#include "octpost/registration.hpp"

#include <algorithm>
#include <cmath>

#include "octpost/parallel.hpp"
#include "octpost/rng.hpp"

namespace octpost {

const char* reg_method_name(RegMethod m) {
  switch (m) {
    case RegMethod::Height: return "height";
    case RegMethod::Keypoint: return "keypoint";
    case RegMethod::Flow: return "flow";
    case RegMethod::Hybrid: return "hybrid";
  }
  return "unknown";
}

RegMethod reg_method_from_name(const std::string& name) {
  if (name == "height") return RegMethod::Height;
  if (name == "keypoint") return RegMethod::Keypoint;
  if (name == "flow") return RegMethod::Flow;
  if (name == "hybrid") return RegMethod::Hybrid;
  fail(Err::BadParams, "unknown registration method: " + name);
}

KeypointAlgo keypoint_algo_from_name(const std::string& name) {
  if (name == "dog") return KeypointAlgo::Dog;
  if (name == "fast_brief") return KeypointAlgo::FastBrief;
  if (name == "orb") return KeypointAlgo::Orb;
  fail(Err::BadParams, "unknown keypoint algorithm: " + name);
}

const char* keypoint_algo_name(KeypointAlgo a) {
  switch (a) {
    case KeypointAlgo::Dog: return "dog";
    case KeypointAlgo::FastBrief: return "fast_brief";
    case KeypointAlgo::Orb: return "orb";
  }
  return "unknown";
}

namespace {

// Reference-side work shared by every frame in a pass.
struct RefContext {
  const Image* image = nullptr;
  double ilm_mean = 0.0;
  bool has_ilm = false;
  std::vector<std::pair<Keypoint, Descriptor>> features;
  std::array<Point, 4> quad{};
  bool has_quad = false;
};

RefContext build_ref_context(const Image& ref, const RegistrationPlan& plan) {
  RefContext ctx;
  ctx.image = &ref;
  switch (plan.method) {
    case RegMethod::Height:
      ctx.ilm_mean = trace_ilm(ref, plan.ilm_params).mean_height;
      ctx.has_ilm = true;
      break;
    case RegMethod::Keypoint:
      ctx.features = detect_keypoints(ref, plan.algo, plan.keypoint_params);
      break;
    case RegMethod::Hybrid:
      ctx.quad = estimate_slab_quad(ref, plan.ilm_params);
      ctx.has_quad = true;
      break;
    case RegMethod::Flow:
      break;
  }
  return ctx;
}

Image register_frame(const Image& frame, const RefContext& ref,
                     const RegistrationPlan& plan, std::uint64_t frame_seed) {
  switch (plan.method) {
    case RegMethod::Height: {
      const double h = trace_ilm(frame, plan.ilm_params).mean_height;
      const int offset = static_cast<int>(std::rint(ref.ilm_mean - h));
      return roll_vertical(frame, offset);
    }
    case RegMethod::Keypoint: {
      const auto features =
          detect_keypoints(frame, plan.algo, plan.keypoint_params);
      std::vector<Descriptor> da, db;
      da.reserve(features.size());
      for (const auto& [kp, d] : features) da.push_back(d);
      db.reserve(ref.features.size());
      for (const auto& [kp, d] : ref.features) db.push_back(d);
      const std::vector<Match> matches =
          match_descriptors(da, db, plan.match_ratio);
      require(matches.size() >= 4, Err::InsufficientMatches,
              std::to_string(matches.size()) + " matches after filtering");
      std::vector<PointPair> pairs;
      pairs.reserve(matches.size());
      for (const Match& m : matches)
        pairs.push_back(
            {{features[m.index_a].first.x, features[m.index_a].first.y},
             {ref.features[m.index_b].first.x,
              ref.features[m.index_b].first.y}});
      RansacOptions opts;
      opts.iterations = plan.ransac_iterations;
      opts.inlier_tol_px = plan.ransac_tol_px;
      opts.seed = frame_seed;
      const RansacResult fit = estimate_homography_ransac(pairs, opts);
      return warp_perspective(frame, fit.h);
    }
    case RegMethod::Flow: {
      const FlowField flow = optical_flow(*ref.image, frame, plan.flow_params);
      return warp_flow(frame, flow);
    }
    case RegMethod::Hybrid: {
      // coarse slab-quad homography first; the flow refinement's
      // small-displacement assumption only holds after that
      const std::array<Point, 4> quad =
          estimate_slab_quad(frame, plan.ilm_params);
      const Homography h = homography_from_quad(quad, ref.quad);
      const Image coarse = warp_perspective(frame, h);
      const FlowField flow =
          optical_flow(*ref.image, coarse, plan.flow_params);
      return warp_flow(coarse, flow);
    }
  }
  fail(Err::BadParams, "unknown registration method");
}

void run_pass(const Stack& input, Stack& output,
              const std::vector<int>& frame_refs,
              const RegistrationPlan& plan, std::uint64_t pass_salt,
              std::vector<std::string>& status) {
  // contexts once per distinct reference, shared read-only by the tasks
  std::vector<int> distinct = frame_refs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  std::vector<RefContext> contexts(distinct.size());
  std::vector<std::string> context_error(distinct.size());
  parallel_for(distinct.size(), [&](std::size_t i) {
    try {
      contexts[i] = build_ref_context(input.frames[distinct[i]], plan);
    } catch (const Error& e) {
      context_error[i] = err_name(e.code());
    }
  });
  auto context_of = [&](int ref_index) {
    const std::size_t i =
        std::lower_bound(distinct.begin(), distinct.end(), ref_index) -
        distinct.begin();
    return std::pair<const RefContext*, const std::string*>(
        &contexts[i], &context_error[i]);
  };

  parallel_for(input.frames.size(), [&](std::size_t f) {
    const int ref_index = frame_refs[f];
    if (static_cast<int>(f) == ref_index) {
      output.frames[f] = input.frames[f];
      return;
    }
    const auto [ctx, ctx_error] = context_of(ref_index);
    if (!ctx_error->empty()) {
      output.frames[f] = input.frames[f];
      status[f] = "failed:" + *ctx_error;
      return;
    }
    try {
      output.frames[f] = register_frame(
          input.frames[f], *ctx, plan,
          Rng::stream(plan.seed ^ pass_salt, f).next_u64());
    } catch (const Error& e) {
      output.frames[f] = input.frames[f];
      status[f] = std::string("failed:") + err_name(e.code());
    }
  });
}

}  // namespace

std::pair<Stack, RegistrationReport> register_stack(
    const Stack& stack, const RegistrationPlan& plan) {
  require(!stack.frames.empty(), Err::NoFrames, "empty stack");
  validate_uniform(stack);
  const int n = static_cast<int>(stack.frames.size());
  const int pass2_ref = plan.pass2_ref < 0 ? n / 2 : plan.pass2_ref;
  require(pass2_ref >= 0 && pass2_ref < n, Err::BadParams,
          "pass-2 reference out of range");
  for (int r : plan.pass1_refs)
    require(r >= 0 && r < n, Err::BadParams,
            "pass-1 reference " + std::to_string(r) + " out of range");

  std::vector<std::string> status(n);

  Stack current;
  current.axial_res_um_per_px = stack.axial_res_um_per_px;
  current.source_labels = stack.source_labels;
  current.frames = stack.frames;

  if (!plan.pass1_refs.empty()) {
    std::vector<int> refs = plan.pass1_refs;
    std::sort(refs.begin(), refs.end());
    std::vector<int> frame_refs(n);
    for (int f = 0; f < n; ++f) {
      // nearest reference by index, smaller index on ties
      int best = refs.front();
      for (int r : refs)
        if (std::abs(r - f) < std::abs(best - f)) best = r;
      frame_refs[f] = best;
    }
    Stack pass1 = current;
    run_pass(current, pass1, frame_refs, plan, 0x70617373'31ull, status);
    current = std::move(pass1);
  }

  {
    std::vector<int> frame_refs(n, pass2_ref);
    Stack pass2 = current;
    run_pass(current, pass2, frame_refs, plan, 0x70617373'32ull, status);
    current = std::move(pass2);
  }

  RegistrationReport report;
  const Image& reference = current.frames[pass2_ref];
  std::vector<double> correlations(n, 0.0);
  parallel_for(current.frames.size(), [&](std::size_t f) {
    try {
      correlations[f] = pearson_correlation(current.frames[f], reference);
    } catch (const Error&) {
      correlations[f] = 0.0;  // constant frames carry no signal
    }
  });
  for (int f = 0; f < n; ++f) {
    FrameRegRecord row;
    row.frame_index = f;
    row.method = reg_method_name(plan.method);
    if (plan.method == RegMethod::Keypoint)
      row.method += std::string(":") + keypoint_algo_name(plan.algo);
    row.reference_index = pass2_ref;
    row.correlation = correlations[f];
    row.status = status[f].empty() ? (f == pass2_ref ? "reference" : "ok")
                                   : status[f];
    report.rows.push_back(std::move(row));
  }
  report.correlation = MetricReport::from_values(correlations);
  return {std::move(current), std::move(report)};
}

}  // namespace octpost

#include "octpost/pipeline.hpp"

#include <fstream>

#include <json.hpp>

#include "octpost/layers.hpp"
#include "octpost/parallel.hpp"
#include "octpost/report_io.hpp"
#include "octpost/stack_io.hpp"

namespace fs = std::filesystem;

namespace octpost {

namespace {

using nlohmann::json;

SuppressMode mode_from_name(const std::string& name) {
  if (name == "complement_boost") return SuppressMode::ComplementBoost;
  if (name == "verbatim") return SuppressMode::Verbatim;
  fail(Err::ConfigInvalid, "shadow.mode: unknown mode " + name);
}

const char* mode_name(SuppressMode mode) {
  return mode == SuppressMode::Verbatim ? "verbatim" : "complement_boost";
}

}  // namespace

PipelineConfig pipeline_config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Err::ConfigInvalid, path + ": " + e.what());
  }

  PipelineConfig c;
  try {
    if (j.contains("input")) {
      const auto& input = j["input"];
      c.stack_dir = input.value("stack_dir", "");
      c.phantom_spec_path = input.value("phantom_spec", "");
    }
    c.output_dir = j.value("output_dir", "");
    c.seed = j.value("seed", std::uint64_t{0});
    c.threads = j.value("threads", 0);

    if (j.contains("registration")) {
      const auto& r = j["registration"];
      c.registration_enabled = r.value("enabled", true);
      if (r.contains("method"))
        c.method = reg_method_from_name(r["method"].get<std::string>());
      if (r.contains("algo"))
        c.algo = keypoint_algo_from_name(r["algo"].get<std::string>());
      if (r.contains("refs")) c.refs = r["refs"].get<std::vector<int>>();
      c.auto_refs = r.value("auto_refs", false);
    }
    if (j.contains("shadow")) {
      const auto& s = j["shadow"];
      c.shadow_enabled = s.value("enabled", true);
      c.shadow_source = s.value("source", std::string("auto"));
      c.alpha = s.value("alpha", c.alpha);
      c.alpha_opt = s.value("alpha_opt", false);
      c.alpha_search.alpha_min = s.value("alpha_min", c.alpha_search.alpha_min);
      c.alpha_search.alpha_max = s.value("alpha_max", c.alpha_search.alpha_max);
      c.alpha_search.alpha_step =
          s.value("alpha_step", c.alpha_search.alpha_step);
      c.alpha_search.w_mean = s.value("w_mean", c.alpha_search.w_mean);
      c.alpha_search.w_std = s.value("w_std", c.alpha_search.w_std);
      c.alpha_search.w_zero = s.value("w_zero", c.alpha_search.w_zero);
      if (s.contains("mode"))
        c.mode = mode_from_name(s["mode"].get<std::string>());
      c.alpha_search.mode = c.mode;
    }
    if (j.contains("thickness")) {
      const auto& t = j["thickness"];
      c.thickness_enabled = t.value("enabled", true);
      c.mask_dir = t.value("mask_dir", "");
      c.axial_res_um_per_px =
          t.value("axial_res_um_per_px", c.axial_res_um_per_px);
      c.reference_csv = t.value("reference_csv", "");
    }
    if (j.contains("emit")) {
      const auto& e = j["emit"];
      c.emit_enface = e.value("enface", true);
      c.emit_metrics = e.value("metrics", true);
      c.emit_stacks = e.value("stacks", true);
    }
  } catch (const json::exception& e) {
    fail(Err::ConfigInvalid, path + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == Err::BadParams)
      fail(Err::ConfigInvalid, std::string(e.what()));
    throw;
  }
  return c;
}

void validate_config(const PipelineConfig& config) {
  require(!config.output_dir.empty(), Err::ConfigInvalid,
          "output_dir: missing");
  const bool has_stack = !config.stack_dir.empty();
  const bool has_phantom = !config.phantom_spec_path.empty();
  require(has_stack != has_phantom, Err::ConfigInvalid,
          "input: exactly one of input.stack_dir and input.phantom_spec");
  if (has_stack)
    require(fs::exists(config.stack_dir), Err::ConfigInvalid,
            "input.stack_dir: " + config.stack_dir + " does not exist");
  if (has_phantom)
    require(fs::exists(config.phantom_spec_path), Err::ConfigInvalid,
            "input.phantom_spec: " + config.phantom_spec_path +
                " does not exist");
  if (config.shadow_source.rfind("coco:", 0) == 0)
    require(fs::exists(config.shadow_source.substr(5)), Err::ConfigInvalid,
            "shadow.source: " + config.shadow_source.substr(5) +
                " does not exist");
  else
    require(config.shadow_source == "auto" ||
                config.shadow_source == "ground_truth",
            Err::ConfigInvalid,
            "shadow.source: must be auto, ground_truth or coco:<path>");
  if (config.shadow_source == "ground_truth")
    require(has_phantom, Err::ConfigInvalid,
            "shadow.source: ground_truth needs a phantom input");
  if (!config.mask_dir.empty())
    require(fs::exists(config.mask_dir), Err::ConfigInvalid,
            "thickness.mask_dir: " + config.mask_dir + " does not exist");
  if (!config.reference_csv.empty())
    require(fs::exists(config.reference_csv), Err::ConfigInvalid,
            "thickness.reference_csv: " + config.reference_csv +
                " does not exist");
  require(config.alpha > 0.0, Err::ConfigInvalid,
          "shadow.alpha: must be positive");
}

namespace {

struct StageLog {
  json summary = json::object();
  bool ok = true;

  void record(const std::string& stage, const json& detail) {
    summary[stage] = detail;
  }
  void record_failure(const std::string& stage, const std::string& what) {
    summary[stage] = {{"status", "failed"}, {"error", what}};
    ok = false;
  }
};

json config_to_json(const PipelineConfig& c) {
  json j;
  j["input"] = {{"stack_dir", c.stack_dir},
                {"phantom_spec", c.phantom_spec_path}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["registration"] = {{"enabled", c.registration_enabled},
                       {"method", reg_method_name(c.method)},
                       {"algo", keypoint_algo_name(c.algo)},
                       {"refs", c.refs},
                       {"auto_refs", c.auto_refs}};
  j["shadow"] = {{"enabled", c.shadow_enabled},
                 {"source", c.shadow_source},
                 {"alpha", c.alpha},
                 {"alpha_opt", c.alpha_opt},
                 {"mode", mode_name(c.mode)}};
  j["thickness"] = {{"enabled", c.thickness_enabled},
                    {"mask_dir", c.mask_dir},
                    {"axial_res_um_per_px", c.axial_res_um_per_px},
                    {"reference_csv", c.reference_csv}};
  j["emit"] = {{"enface", c.emit_enface},
               {"metrics", c.emit_metrics},
               {"stacks", c.emit_stacks}};
  return j;
}

// Frames' boundary maps concatenated column-wise so thickness statistics
// pool every column of every frame.
ThicknessReport thickness_over_masks(const std::vector<Image>& masks,
                                     int expected_count, double axial_res) {
  require(!masks.empty(), Err::NoBoundaries, "no masks to trace");
  BoundaryMap combined;
  for (const Image& mask : masks) {
    BoundaryMap traced = interpolate_gaps(
        trace_boundaries(mask, expected_count), 40);
    if (combined.depth.empty()) {
      combined = traced;
    } else {
      require(traced.boundary_count() == combined.boundary_count(),
              Err::DimensionMismatch, "mask boundary counts differ");
      for (int k = 0; k < combined.boundary_count(); ++k)
        combined.depth[k].insert(combined.depth[k].end(),
                                 traced.depth[k].begin(),
                                 traced.depth[k].end());
      combined.width += traced.width;
    }
  }
  return compute_thickness(combined, axial_res);
}

}  // namespace

int run_pipeline(const PipelineConfig& config) {
  validate_config(config);
  if (config.threads > 0) set_thread_count(config.threads);
  fs::create_directories(config.output_dir);
  const fs::path out_dir = config.output_dir;

  StageLog log;
  Stack current;
  std::optional<GroundTruth> ground_truth;

  // ---- ingest ----
  try {
    if (!config.phantom_spec_path.empty()) {
      PhantomSpec spec = phantom_spec_from_json_file(config.phantom_spec_path);
      if (spec.seed == 0) spec.seed = config.seed;
      auto [stack, gt] = generate_phantom(spec);
      current = std::move(stack);
      ground_truth = std::move(gt);
      if (config.emit_stacks) save_stack(current, out_dir / "phantom");
      write_ground_truth_json(*ground_truth,
                              (out_dir / "ground_truth.json").string());
      log.record("ingest", {{"status", "ok"},
                            {"source", "phantom"},
                            {"frames", current.frame_count()}});
    } else {
      current = load_stack(config.stack_dir);
      log.record("ingest", {{"status", "ok"},
                            {"source", config.stack_dir},
                            {"frames", current.frame_count()}});
    }
  } catch (const std::exception& e) {
    log.record_failure("ingest", e.what());
    // nothing to continue with
    json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = config.seed;
    manifest["config"] = config_to_json(config);
    manifest["stages"] = log.summary;
    std::ofstream out(out_dir / "run_manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
    return 1;
  }

  // ---- registration ----
  if (config.registration_enabled) {
    try {
      RegistrationPlan plan;
      plan.method = config.method;
      plan.algo = config.algo;
      plan.seed = config.seed;
      if (config.auto_refs)
        plan.pass1_refs = select_reference_frames(current);
      else
        plan.pass1_refs = config.refs;
      auto [registered, report] = register_stack(current, plan);
      current = std::move(registered);
      if (config.emit_stacks) save_stack(current, out_dir / "registered");
      write_registration_csv(report, out_dir / "registration_report.csv");
      log.record("registration",
                 {{"status", "ok"},
                  {"method", reg_method_name(config.method)},
                  {"mean_correlation", report.correlation.mean},
                  {"pass1_refs", plan.pass1_refs}});
    } catch (const std::exception& e) {
      log.record_failure("registration", e.what());
    }
  }

  // ---- shadow detection + suppression ----
  if (config.shadow_enabled) {
    try {
      std::vector<ShadowRegion> regions;
      std::string source = config.shadow_source;
      if (config.shadow_source == "auto") {
        std::vector<std::vector<ShadowRegion>> per_frame(
            current.frame_count());
        parallel_for(current.frame_count(), [&](std::size_t f) {
          per_frame[f] = detect_shadow_columns(current.frames[f], {},
                                               static_cast<int>(f));
        });
        for (auto& v : per_frame)
          regions.insert(regions.end(), v.begin(), v.end());
      } else if (config.shadow_source == "ground_truth") {
        regions = ground_truth->shadow_regions;
      } else {
        const CocoImportResult imported =
            import_coco_regions(config.shadow_source.substr(5), current);
        regions = imported.regions;
        source = "coco";
      }

      double alpha = config.alpha;
      if (config.alpha_opt) {
        const AlphaResult result =
            optimize_alpha(current, regions, config.alpha_search);
        alpha = result.alpha_star;
        write_alpha_trace_csv(result, out_dir / "alpha_trace.csv");
      }
      if (!regions.empty())
        current = suppress_shadows(current, regions, alpha, config.mode);
      if (config.emit_stacks) save_stack(current, out_dir / "deshadowed");
      write_shadow_csv(regions, source, out_dir / "shadow_report.csv");
      log.record("shadow", {{"status", "ok"},
                            {"regions", regions.size()},
                            {"alpha", alpha},
                            {"mode", mode_name(config.mode)}});
    } catch (const std::exception& e) {
      log.record_failure("shadow", e.what());
    }
  }

  // ---- enface + metrics ----
  if (config.emit_enface) {
    try {
      write_png_gray8(enface(current), out_dir / "enface.png");
      log.record("enface", {{"status", "ok"}});
    } catch (const std::exception& e) {
      log.record_failure("enface", e.what());
    }
  }
  if (config.emit_metrics) {
    try {
      write_metrics_csv(current, out_dir / "metrics.csv");
      log.record("metrics", {{"status", "ok"}});
    } catch (const std::exception& e) {
      log.record_failure("metrics", e.what());
    }
  }

  // ---- thickness ----
  if (config.thickness_enabled) {
    try {
      std::vector<Image> masks;
      if (!config.mask_dir.empty()) {
        const Stack mask_stack = load_stack(config.mask_dir);
        masks = mask_stack.frames;
      } else if (ground_truth.has_value()) {
        for (std::size_t f = 0; f < current.frame_count(); ++f) {
          const BoundaryMap map = make_boundary_map(
              ground_truth->boundary_names, ground_truth->boundaries[f]);
          masks.push_back(render_boundary_mask(map, current.height()));
        }
      } else {
        fail(Err::ConfigInvalid,
             "thickness.mask_dir: required for stack inputs");
      }
      const int boundary_count =
          ground_truth.has_value() && config.mask_dir.empty()
              ? static_cast<int>(ground_truth->boundary_names.size())
              : static_cast<int>(BoundaryMap::default_names().size());
      ThicknessReport report = thickness_over_masks(
          masks, boundary_count, config.axial_res_um_per_px);
      if (!config.reference_csv.empty())
        compare_reference(report, read_reference_csv(config.reference_csv));
      write_thickness_json(report, out_dir / "thickness_report.json");
      log.record("thickness",
                 {{"status", "ok"},
                  {"full_span_um", report.full_span.mean_um},
                  {"layers", report.layers.size()}});
    } catch (const std::exception& e) {
      log.record_failure("thickness", e.what());
    }
  }

  json manifest;
  manifest["version"] = kVersion;
  manifest["seed"] = config.seed;
  manifest["config"] = config_to_json(config);
  manifest["stages"] = log.summary;
  std::ofstream out(out_dir / "run_manifest.json", std::ios::binary);
  require(out.good(), Err::IoError, "cannot write run_manifest.json");
  out << manifest.dump(2) << "\n";
  return log.ok ? 0 : 1;
}

}  // namespace octpost

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "octpost/layers.hpp"
#include "octpost/parallel.hpp"
#include "octpost/pipeline.hpp"
#include "octpost/report_io.hpp"
#include "octpost/stack_io.hpp"

namespace fs = std::filesystem;
using namespace octpost;

namespace {

ThicknessReport thickness_from_mask_dir(const std::string& mask_dir,
                                        double axial_res) {
  const Stack masks = load_stack(mask_dir);
  const int expected =
      static_cast<int>(BoundaryMap::default_names().size());
  BoundaryMap combined;
  for (const Image& mask : masks.frames) {
    BoundaryMap traced =
        interpolate_gaps(trace_boundaries(mask, expected), 40);
    if (combined.depth.empty()) {
      combined = traced;
    } else {
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

int main(int argc, char** argv) {
  CLI::App app{"OCT B-scan post-processing: registration, shadow "
               "suppression, layer thickness"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 0;
  std::string config_path;
  app.add_option("--seed", seed, "global RNG seed");
  app.add_option("--threads", threads, "worker thread count (0 = auto)");
  app.add_option("--config", config_path, "pipeline JSON config file");

  // phantom
  auto* cmd_phantom = app.add_subcommand("phantom", "generate a synthetic "
                                                    "stack with ground truth");
  std::string phantom_spec, phantom_out;
  cmd_phantom->add_option("--spec", phantom_spec, "phantom spec JSON")
      ->required();
  cmd_phantom->add_option("--out", phantom_out, "output directory")
      ->required();

  // register
  auto* cmd_register = app.add_subcommand("register", "two-pass stack "
                                                      "registration");
  std::string reg_in, reg_out, reg_method = "hybrid", reg_algo = "orb";
  std::string reg_refs;
  bool reg_auto_refs = false;
  cmd_register->add_option("--in", reg_in, "input stack directory")
      ->required();
  cmd_register->add_option("--out", reg_out, "output directory")->required();
  cmd_register->add_option("--method", reg_method,
                           "hybrid|height|keypoint|flow");
  cmd_register->add_option("--algo", reg_algo, "orb|fast_brief|dog");
  cmd_register->add_option("--refs", reg_refs,
                           "comma-separated pass-1 reference indices");
  cmd_register->add_flag("--auto-refs", reg_auto_refs,
                         "select pass-1 references from ILM height drops");

  // deshadow
  auto* cmd_deshadow = app.add_subcommand("deshadow", "shadow detection and "
                                                      "suppression");
  std::string sh_in, sh_out, sh_regions = "auto", sh_mode = "complement_boost";
  double sh_alpha = 1.3;
  bool sh_alpha_opt = false;
  cmd_deshadow->add_option("--in", sh_in, "input stack directory")
      ->required();
  cmd_deshadow->add_option("--out", sh_out, "output directory")->required();
  cmd_deshadow->add_option("--regions", sh_regions, "auto | coco:file.json");
  cmd_deshadow->add_option("--alpha", sh_alpha, "suppression factor");
  cmd_deshadow->add_flag("--alpha-opt", sh_alpha_opt,
                         "grid-optimize alpha before suppressing");
  cmd_deshadow->add_option("--mode", sh_mode, "complement_boost|verbatim");

  // enface
  auto* cmd_enface = app.add_subcommand("enface", "mean projection image");
  std::string en_in, en_out;
  cmd_enface->add_option("--in", en_in, "input stack directory")->required();
  cmd_enface->add_option("--out", en_out, "output PNG path")->required();

  // metrics
  auto* cmd_metrics = app.add_subcommand("metrics", "per-frame correlation "
                                                    "and SNR CSV");
  std::string me_in, me_out;
  cmd_metrics->add_option("--in", me_in, "input stack directory")->required();
  cmd_metrics->add_option("--out", me_out, "output CSV path")->required();

  // thickness
  auto* cmd_thickness = app.add_subcommand("thickness", "layer thickness "
                                                        "from boundary masks");
  std::string th_mask, th_ref, th_out = "thickness_report.json";
  double th_axial = kDefaultAxialResUmPerPx;
  cmd_thickness->add_option("--mask", th_mask, "boundary mask directory")
      ->required();
  cmd_thickness->add_option("--axial-res", th_axial, "microns per pixel");
  cmd_thickness->add_option("--reference", th_ref,
                            "reference CSV (layer,um)");
  cmd_thickness->add_option("--out", th_out, "output report JSON");

  // pipeline
  auto* cmd_pipeline = app.add_subcommand("pipeline", "full processing "
                                                      "pipeline from config");
  std::string pl_out, pl_method, pl_source;
  cmd_pipeline->add_option("--out", pl_out, "override output_dir");
  cmd_pipeline->add_option("--method", pl_method,
                           "override registration method");
  cmd_pipeline->add_option("--regions", pl_source,
                           "override shadow source");

  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);

  try {
    if (*cmd_phantom) {
      const PhantomSpec spec = phantom_spec_from_json_file(phantom_spec);
      auto [stack, gt] = generate_phantom(spec);
      save_stack(stack, phantom_out);
      write_ground_truth_json(gt,
                              (fs::path(phantom_out) / "ground_truth.json")
                                  .string());
      std::printf("wrote %zu frames to %s\n", stack.frame_count(),
                  phantom_out.c_str());
    } else if (*cmd_register) {
      const Stack stack = load_stack(reg_in);
      RegistrationPlan plan;
      plan.method = reg_method_from_name(reg_method);
      plan.algo = keypoint_algo_from_name(reg_algo);
      plan.seed = seed;
      if (reg_auto_refs) {
        plan.pass1_refs = select_reference_frames(stack);
      } else if (!reg_refs.empty()) {
        std::size_t pos = 0;
        while (pos < reg_refs.size()) {
          const std::size_t comma = reg_refs.find(',', pos);
          const std::string token =
              reg_refs.substr(pos, comma == std::string::npos
                                       ? std::string::npos
                                       : comma - pos);
          plan.pass1_refs.push_back(std::stoi(token));
          if (comma == std::string::npos) break;
          pos = comma + 1;
        }
      }
      auto [registered, report] = register_stack(stack, plan);
      save_stack(registered, reg_out);
      write_registration_csv(report,
                             fs::path(reg_out) / "registration_report.csv");
      std::printf("mean correlation %.4f over %zu frames\n",
                  report.correlation.mean, registered.frame_count());
    } else if (*cmd_deshadow) {
      const Stack stack = load_stack(sh_in);
      std::vector<ShadowRegion> regions;
      std::string source = sh_regions;
      if (sh_regions == "auto") {
        for (std::size_t f = 0; f < stack.frame_count(); ++f) {
          const auto found = detect_shadow_columns(
              stack.frames[f], {}, static_cast<int>(f));
          regions.insert(regions.end(), found.begin(), found.end());
        }
      } else if (sh_regions.rfind("coco:", 0) == 0) {
        regions = import_coco_regions(sh_regions.substr(5), stack).regions;
        source = "coco";
      } else {
        std::fprintf(stderr, "--regions must be auto or coco:<file>\n");
        return 2;
      }
      const SuppressMode mode = sh_mode == "verbatim"
                                    ? SuppressMode::Verbatim
                                    : SuppressMode::ComplementBoost;
      double alpha = sh_alpha;
      fs::create_directories(sh_out);
      if (sh_alpha_opt) {
        AlphaSearch search;
        search.mode = mode;
        const AlphaResult result = optimize_alpha(stack, regions, search);
        alpha = result.alpha_star;
        write_alpha_trace_csv(result, fs::path(sh_out) / "alpha_trace.csv");
      }
      const Stack suppressed =
          regions.empty() ? stack
                          : suppress_shadows(stack, regions, alpha, mode);
      save_stack(suppressed, sh_out);
      write_shadow_csv(regions, source, fs::path(sh_out) /
                                            "shadow_report.csv");
      std::printf("suppressed %zu regions at alpha %.3f\n", regions.size(),
                  alpha);
    } else if (*cmd_enface) {
      write_png_gray8(enface(load_stack(en_in)), en_out);
    } else if (*cmd_metrics) {
      write_metrics_csv(load_stack(me_in), me_out);
    } else if (*cmd_thickness) {
      ThicknessReport report = thickness_from_mask_dir(th_mask, th_axial);
      if (!th_ref.empty())
        compare_reference(report, read_reference_csv(th_ref));
      write_thickness_json(report, th_out);
      std::printf("full span %.2f um (%.2f px)\n", report.full_span.mean_um,
                  report.full_span.mean_px);
    } else if (*cmd_pipeline) {
      if (config_path.empty()) {
        std::fprintf(stderr, "pipeline needs --config\n");
        return 2;
      }
      PipelineConfig config = pipeline_config_from_json_file(config_path);
      // flags win over config fields
      if (!pl_out.empty()) config.output_dir = pl_out;
      if (!pl_method.empty()) config.method = reg_method_from_name(pl_method);
      if (!pl_source.empty()) config.shadow_source = pl_source;
      if (seed != 0) config.seed = seed;
      if (threads != 0) config.threads = threads;
      return run_pipeline(config);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

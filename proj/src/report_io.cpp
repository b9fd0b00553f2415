#include "octpost/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "octpost/parallel.hpp"

namespace octpost {

std::string format_fixed6(double v) {
  if (!std::isfinite(v)) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Err::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_registration_csv(const RegistrationReport& report,
                            const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "frame_index,method,reference_index,correlation,status\n";
  for (const FrameRegRecord& row : report.rows)
    out << row.frame_index << ',' << row.method << ',' << row.reference_index
        << ',' << format_fixed6(row.correlation) << ',' << row.status
        << '\n';
}

void write_shadow_csv(const std::vector<ShadowRegion>& regions,
                      const std::string& source,
                      const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "frame_index,col_start,col_end,source\n";
  for (const ShadowRegion& r : regions)
    out << r.frame_index << ',' << r.col_start << ',' << r.col_end << ','
        << source << '\n';
}

void write_alpha_trace_csv(const AlphaResult& result,
                           const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "alpha,J,mean,std,zeros\n";
  for (const AlphaTracePoint& p : result.trace)
    out << format_fixed6(p.alpha) << ',' << format_fixed6(p.objective) << ','
        << format_fixed6(p.mean) << ',' << format_fixed6(p.std_dev) << ','
        << p.zeros << '\n';
}

void write_metrics_csv(const Stack& stack,
                       const std::filesystem::path& path) {
  require(!stack.frames.empty(), Err::NoFrames, "empty stack");
  const Image& reference = stack.frames[stack.frames.size() / 2];
  std::vector<double> correlation(stack.frame_count(), 0.0);
  std::vector<double> snr(stack.frame_count(), 0.0);
  parallel_for(stack.frame_count(), [&](std::size_t f) {
    try {
      correlation[f] = pearson_correlation(stack.frames[f], reference);
    } catch (const Error&) {
      correlation[f] = 0.0;
    }
    snr[f] = snr_db(stack.frames[f]);
  });
  std::ofstream out = open_out(path);
  out << "frame_index,correlation,snr_db\n";
  for (std::size_t f = 0; f < stack.frame_count(); ++f)
    out << f << ',' << format_fixed6(correlation[f]) << ','
        << format_fixed6(snr[f]) << '\n';
}

namespace {

nlohmann::json layer_to_json(const LayerThickness& t) {
  nlohmann::json j;
  j["name"] = t.name;
  j["mean_px"] = t.mean_px;
  j["std_px"] = t.std_px;
  j["mean_um"] = t.mean_um;
  j["columns"] = t.columns;
  if (t.percent_error >= 0.0) j["percent_error"] = t.percent_error;
  return j;
}

}  // namespace

std::string thickness_report_to_json(const ThicknessReport& report) {
  nlohmann::json j;
  j["axial_res_um_per_px"] = report.axial_res_um_per_px;
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerThickness& t : report.layers)
    layers.push_back(layer_to_json(t));
  j["layers"] = std::move(layers);
  j["full_span"] = layer_to_json(report.full_span);
  if (report.mean_abs_rel_error >= 0.0)
    j["mean_abs_rel_error"] = report.mean_abs_rel_error;
  return j.dump(2) + "\n";
}

void write_thickness_json(const ThicknessReport& report,
                          const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << thickness_report_to_json(report);
}

std::vector<std::pair<std::string, double>> read_reference_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Err::IoError, "cannot open " + path.string());
  std::vector<std::pair<std::string, double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("layer", 0) == 0) continue;  // header
    }
    const std::size_t comma = line.find(',');
    require(comma != std::string::npos, Err::Malformed,
            "reference CSV row lacks a comma: " + line);
    try {
      rows.emplace_back(line.substr(0, comma),
                        std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      fail(Err::Malformed, "bad reference CSV row: " + line);
    }
  }
  require(!rows.empty(), Err::Malformed, "reference CSV has no rows");
  return rows;
}

}  // namespace octpost

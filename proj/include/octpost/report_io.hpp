#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "octpost/layers.hpp"
#include "octpost/metrics.hpp"
#include "octpost/registration.hpp"
#include "octpost/shadow.hpp"

namespace octpost {

// All CSV artifacts: comma delimiter, header row, '\n' endings, reals fixed
// to 6 decimals. Byte-identical across runs with equal inputs.
std::string format_fixed6(double v);

void write_registration_csv(const RegistrationReport& report,
                            const std::filesystem::path& path);

// rows: frame_index,col_start,col_end,source
void write_shadow_csv(const std::vector<ShadowRegion>& regions,
                      const std::string& source,
                      const std::filesystem::path& path);

// rows: alpha,J,mean,std,zeros
void write_alpha_trace_csv(const AlphaResult& result,
                           const std::filesystem::path& path);

// rows: frame_index,correlation,snr_db (correlation against the central
// frame)
void write_metrics_csv(const Stack& stack, const std::filesystem::path& path);

std::string thickness_report_to_json(const ThicknessReport& report);
void write_thickness_json(const ThicknessReport& report,
                          const std::filesystem::path& path);

// reference CSV columns: layer,um
std::vector<std::pair<std::string, double>> read_reference_csv(
    const std::filesystem::path& path);

}  // namespace octpost

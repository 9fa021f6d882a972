#pragma once

#include <filesystem>
#include <string>

#include "sci/solvers.hpp"
#include <json.hpp>

namespace sci {

/// Shortest round-trip decimal form; "nan", "inf" and "-inf" for non-finite values.
std::string format_number(double v);

struct ReportOptions {
  /// When false the millis column is written as 0 so reruns are byte-identical.
  bool timing = false;
  /// Written as a leading "# " line in CSV and a field in JSON when non-empty.
  std::string metric_convention;
};

/// Columns: k, lambda_or_rho, sigma, delta, residual, psnr, ssim, millis.
std::string report_csv(const RunReport& report, const ReportOptions& opts = {});
nlohmann::ordered_json report_json(const RunReport& report, const ReportOptions& opts = {});

/// JSON-safe number: non-finite values become the strings "nan" / "inf" / "-inf".
nlohmann::ordered_json json_number(double v);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sci

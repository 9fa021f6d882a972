#include "sci/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace sci {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) fail(ErrorKind::io, "format_number: conversion failed");
  return std::string(buf, end);
}

nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

std::string report_csv(const RunReport& report, const ReportOptions& opts) {
  std::string out;
  if (!opts.metric_convention.empty()) out += "# metrics: " + opts.metric_convention + "\n";
  out += "k,lambda_or_rho,sigma,delta,residual,psnr,ssim,millis\n";
  for (const IterationRecord& r : report.iterations) {
    out += std::to_string(r.k);
    for (double v : {r.lambda_or_rho, r.sigma, r.delta, r.residual, r.psnr, r.ssim,
                     opts.timing ? r.millis : 0.0})
      out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

nlohmann::ordered_json report_json(const RunReport& report, const ReportOptions& opts) {
  nlohmann::ordered_json j;
  j["solver"] = report.solver;
  j["denoiser"] = report.denoiser;
  if (!opts.metric_convention.empty()) j["metric_convention"] = opts.metric_convention;
  j["init_psnr"] = json_number(report.init_psnr);
  j["final_psnr"] = json_number(report.final_psnr);
  j["final_ssim"] = json_number(report.final_ssim);
  j["next_lambda_or_rho"] = json_number(report.next_lambda_or_rho);
  auto& rows = j["iterations"] = nlohmann::ordered_json::array();
  for (const IterationRecord& r : report.iterations) {
    rows.push_back({{"k", r.k},
                    {"lambda_or_rho", json_number(r.lambda_or_rho)},
                    {"sigma", json_number(r.sigma)},
                    {"delta", json_number(r.delta)},
                    {"residual", json_number(r.residual)},
                    {"psnr", json_number(r.psnr)},
                    {"ssim", json_number(r.ssim)},
                    {"millis", opts.timing ? r.millis : 0.0},
                    {"consistency", json_number(r.consistency)},
                    {"step_norm", json_number(r.step_norm)},
                    {"gap_norm", json_number(r.gap_norm)}});
  }
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace sci

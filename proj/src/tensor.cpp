#include "sci/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace sci {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape_mismatch: return "shape mismatch";
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::non_finite: return "non-finite";
    case ErrorKind::bad_magic: return "bad magic";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::io: return "io";
    case ErrorKind::diverged: return "diverged";
    case ErrorKind::denoiser_failure: return "denoiser failure";
    case ErrorKind::bridge_timeout: return "bridge timeout";
    case ErrorKind::bridge_protocol: return "bridge protocol";
    case ErrorKind::bridge_io: return "bridge io";
    case ErrorKind::bridge_non_finite: return "bridge non-finite";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

std::string to_string(const Dims& d) {
  return "(" + std::to_string(d.nx) + "," + std::to_string(d.ny) + "," +
         std::to_string(d.channels) + "," + std::to_string(d.frames) + ")";
}

Array4::Array4(Dims dims, double fill)
    : dims_(dims), values_(dims.size(), fill) {}

Array4::Array4(Dims dims, std::vector<double> values)
    : dims_(dims), values_(std::move(values)) {
  if (values_.size() != dims_.size())
    fail(ErrorKind::shape_mismatch,
         "array of dims " + to_string(dims_) + " needs " +
             std::to_string(dims_.size()) + " values, got " +
             std::to_string(values_.size()));
}

bool Array4::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

bool Array4::within_unit_range() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

double Array4::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double Array4::min_value() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

namespace {

void require_positive_extents(const Dims& d, const char* what) {
  if (d.nx == 0 || d.ny == 0 || d.channels == 0 || d.frames == 0)
    fail(ErrorKind::invalid_argument,
         std::string(what) + ": every extent must be >= 1, got " + to_string(d));
}

}  // namespace

VideoCube::VideoCube(std::size_t nx, std::size_t ny, std::size_t frames,
                     double fill)
    : Array4(Dims{nx, ny, 1, frames}, fill) {
  require_positive_extents(dims_, "VideoCube");
}

VideoCube::VideoCube(std::size_t nx, std::size_t ny, std::size_t frames,
                     std::vector<double> values)
    : Array4(Dims{nx, ny, 1, frames}, std::move(values)) {
  require_positive_extents(dims_, "VideoCube");
  validate_finite(*this, "VideoCube");
}

MaskCube::MaskCube(std::size_t nx, std::size_t ny, std::size_t frames,
                   double fill)
    : Array4(Dims{nx, ny, 1, frames}, fill) {
  require_positive_extents(dims_, "MaskCube");
}

MaskCube::MaskCube(std::size_t nx, std::size_t ny, std::size_t frames,
                   std::vector<double> values)
    : Array4(Dims{nx, ny, 1, frames}, std::move(values)) {
  require_positive_extents(dims_, "MaskCube");
  validate_masks(*this);
}

Measurement::Measurement(std::size_t nx, std::size_t ny, double fill)
    : Array4(Dims{nx, ny, 1, 1}, fill) {
  require_positive_extents(dims_, "Measurement");
}

Measurement::Measurement(std::size_t nx, std::size_t ny,
                         std::vector<double> values)
    : Array4(Dims{nx, ny, 1, 1}, std::move(values)) {
  require_positive_extents(dims_, "Measurement");
  validate_finite(*this, "Measurement");
}

ColorVideoCube::ColorVideoCube(std::size_t nx, std::size_t ny,
                               std::size_t frames, double fill)
    : Array4(Dims{nx, ny, 3, frames}, fill) {
  require_positive_extents(dims_, "ColorVideoCube");
}

ColorVideoCube::ColorVideoCube(std::size_t nx, std::size_t ny,
                               std::size_t frames, std::vector<double> values)
    : Array4(Dims{nx, ny, 3, frames}, std::move(values)) {
  require_positive_extents(dims_, "ColorVideoCube");
  validate_finite(*this, "ColorVideoCube");
}

BayerVideo::BayerVideo(std::size_t nx, std::size_t ny, std::size_t frames,
                       double fill)
    : VideoCube(nx, ny, frames, fill) {
  require_even(dims_, "BayerVideo");
}

BayerVideo::BayerVideo(std::size_t nx, std::size_t ny, std::size_t frames,
                       std::vector<double> values)
    : VideoCube(nx, ny, frames, std::move(values)) {
  require_even(dims_, "BayerVideo");
}

BayerVideo::BayerVideo(VideoCube cube) : VideoCube(std::move(cube)) {
  require_even(dims_, "BayerVideo");
}

void validate_finite(const Array4& a, const char* what) {
  if (!a.all_finite())
    fail(ErrorKind::non_finite, std::string(what) + ": non-finite entry");
}

void validate_signal(const Array4& a, const char* what) {
  validate_finite(a, what);
  if (!a.within_unit_range())
    fail(ErrorKind::invalid_argument,
         std::string(what) + ": entries must lie in [0,1]");
}

void validate_masks(const MaskCube& m) {
  validate_finite(m, "MaskCube");
  for (double v : m.values())
    if (v < 0.0 || v > 1.0)
      fail(ErrorKind::invalid_argument,
           "MaskCube: entries must lie in [0,1] after normalization");
}

void require_even(const Dims& d, const char* what) {
  if (d.nx % 2 != 0 || d.ny % 2 != 0)
    fail(ErrorKind::invalid_argument,
         std::string(what) + ": odd dims " + to_string(d) +
             " (RGGB tiling needs even nx and ny)");
}

}  // namespace sci

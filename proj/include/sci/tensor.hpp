#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sci/error.hpp"

namespace sci {

/// Extents of a dense array. Every container in the library stores its values
/// as planes of nx*ny samples, row index i over nx and column index j over ny
/// (j fastest), then channel, then frame (slowest):
///
///   offset(i, j, c, b) = ((b * channels + c) * nx + i) * ny + j
struct Dims {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t channels = 1;
  std::size_t frames = 1;

  std::size_t plane_size() const { return nx * ny; }
  std::size_t size() const { return nx * ny * channels * frames; }
  bool operator==(const Dims&) const = default;
};

std::string to_string(const Dims& d);

/// Dense double-precision storage shared by all domain containers.
class Array4 {
 public:
  Array4() = default;
  explicit Array4(Dims dims, double fill = 0.0);
  Array4(Dims dims, std::vector<double> values);

  const Dims& dims() const { return dims_; }
  std::size_t nx() const { return dims_.nx; }
  std::size_t ny() const { return dims_.ny; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::size_t offset(std::size_t i, std::size_t j, std::size_t c,
                     std::size_t b) const {
    return ((b * dims_.channels + c) * dims_.nx + i) * dims_.ny + j;
  }

  std::span<double> plane(std::size_t c, std::size_t b) {
    return std::span<double>(values_).subspan(offset(0, 0, c, b),
                                              dims_.plane_size());
  }
  std::span<const double> plane(std::size_t c, std::size_t b) const {
    return std::span<const double>(values_).subspan(offset(0, 0, c, b),
                                                    dims_.plane_size());
  }

  bool all_finite() const;
  bool within_unit_range() const;
  double max_value() const;
  double min_value() const;

  bool operator==(const Array4&) const = default;

 protected:
  Dims dims_;
  std::vector<double> values_;
};

/// Read-only view of a single nx-by-ny plane.
struct ImageView {
  std::span<const double> values;
  std::size_t nx = 0;
  std::size_t ny = 0;

  double operator()(std::size_t i, std::size_t j) const {
    return values[i * ny + j];
  }
};

/// Grayscale video X, shape (nx, ny, B). Also used for solver iterates, which
/// may leave [0,1] transiently; use validate_signal() where the range matters.
class VideoCube : public Array4 {
 public:
  VideoCube() = default;
  VideoCube(std::size_t nx, std::size_t ny, std::size_t frames,
            double fill = 0.0);
  VideoCube(std::size_t nx, std::size_t ny, std::size_t frames,
            std::vector<double> values);

  std::size_t frames() const { return dims_.frames; }
  std::span<double> frame(std::size_t b) { return plane(0, b); }
  std::span<const double> frame(std::size_t b) const { return plane(0, b); }
  ImageView frame_view(std::size_t b) const {
    return {frame(b), dims_.nx, dims_.ny};
  }
  double& at(std::size_t i, std::size_t j, std::size_t b) {
    return values_[offset(i, j, 0, b)];
  }
  double at(std::size_t i, std::size_t j, std::size_t b) const {
    return values_[offset(i, j, 0, b)];
  }

  bool same_shape(const VideoCube& o) const { return dims_ == o.dims_; }
};

/// Sensing masks C, shape (nx, ny, B), entries in [0,1].
class MaskCube : public Array4 {
 public:
  MaskCube() = default;
  MaskCube(std::size_t nx, std::size_t ny, std::size_t frames,
           double fill = 0.0);
  MaskCube(std::size_t nx, std::size_t ny, std::size_t frames,
           std::vector<double> values);

  std::size_t frames() const { return dims_.frames; }
  std::span<const double> frame(std::size_t b) const { return plane(0, b); }
  std::span<double> frame(std::size_t b) { return plane(0, b); }
  double& at(std::size_t i, std::size_t j, std::size_t b) {
    return values_[offset(i, j, 0, b)];
  }
  double at(std::size_t i, std::size_t j, std::size_t b) const {
    return values_[offset(i, j, 0, b)];
  }
};

/// The coded snapshot Y, shape (nx, ny).
class Measurement : public Array4 {
 public:
  Measurement() = default;
  Measurement(std::size_t nx, std::size_t ny, double fill = 0.0);
  Measurement(std::size_t nx, std::size_t ny, std::vector<double> values);

  ImageView view() const { return {values_, dims_.nx, dims_.ny}; }
  double& at(std::size_t i, std::size_t j) { return values_[i * dims_.ny + j]; }
  double at(std::size_t i, std::size_t j) const {
    return values_[i * dims_.ny + j];
  }
};

/// RGB video, shape (nx, ny, 3, B), channel order R, G, B.
class ColorVideoCube : public Array4 {
 public:
  ColorVideoCube() = default;
  ColorVideoCube(std::size_t nx, std::size_t ny, std::size_t frames,
                 double fill = 0.0);
  ColorVideoCube(std::size_t nx, std::size_t ny, std::size_t frames,
                 std::vector<double> values);

  std::size_t frames() const { return dims_.frames; }
  double& at(std::size_t i, std::size_t j, std::size_t c, std::size_t b) {
    return values_[offset(i, j, c, b)];
  }
  double at(std::size_t i, std::size_t j, std::size_t c, std::size_t b) const {
    return values_[offset(i, j, c, b)];
  }
  bool same_shape(const ColorVideoCube& o) const { return dims_ == o.dims_; }
};

enum class BayerPattern : unsigned char { rggb = 0 };

/// Mosaicked video on the sensor grid, shape (nx, ny, B), nx and ny even.
class BayerVideo : public VideoCube {
 public:
  BayerVideo() = default;
  BayerVideo(std::size_t nx, std::size_t ny, std::size_t frames,
             double fill = 0.0);
  BayerVideo(std::size_t nx, std::size_t ny, std::size_t frames,
             std::vector<double> values);
  explicit BayerVideo(VideoCube cube);

  BayerPattern pattern() const { return BayerPattern::rggb; }
};

// Invariant checks. Each throws sci::Error on violation.
void validate_finite(const Array4& a, const char* what);
void validate_signal(const Array4& a, const char* what);
void validate_masks(const MaskCube& m);
void require_even(const Dims& d, const char* what);

}  // namespace sci

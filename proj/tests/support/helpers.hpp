#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "sci/log.hpp"
#include "sci/maskgen.hpp"
#include "sci/tensor.hpp"

namespace sci::test {

inline VideoCube random_video(std::size_t nx, std::size_t ny, std::size_t frames, Rng& rng) {
  VideoCube v(nx, ny, frames);
  for (double& x : v.values()) x = rng.uniform();
  return v;
}

inline MaskCube random_masks(std::size_t nx, std::size_t ny, std::size_t frames, Rng& rng) {
  MaskCube m(nx, ny, frames);
  for (double& x : m.values()) x = rng.uniform();
  return m;
}

inline Measurement random_measurement(std::size_t nx, std::size_t ny, Rng& rng) {
  Measurement y(nx, ny);
  for (double& x : y.values()) x = 4.0 * rng.uniform();
  return y;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("sci_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Silences library warnings for the lifetime of the object.
class QuietWarnings {
 public:
  QuietWarnings() : previous_(set_warning_sink([](const std::string&) {})) {}
  ~QuietWarnings() { set_warning_sink(std::move(previous_)); }

 private:
  WarningSink previous_;
};

}  // namespace sci::test

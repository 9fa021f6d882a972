#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sci/color.hpp"
#include "sci/denoisers.hpp"
#include "sci/error.hpp"
#include "sci/maskgen.hpp"
#include "sci/solvers.hpp"

namespace sci::cli {

enum class ColorModeOption { gray, channelwise, joint_periter, joint_halfres };
const char* to_string(ColorModeOption m);
ColorModeOption color_mode_from_string(const std::string& name);

struct MaskOption {
  std::string kind = "bernoulli";  // bernoulli | shifting | file
  double p = 0.5;
  std::filesystem::path path;
};

struct WarmupOption {
  DenoiserBinding denoiser;
  int max_iters = 10;
};

struct BenchConfig {
  std::optional<SceneSpec> scene;
  /// SCI1 video/colour container or raster-sequence prefix; overrides `scene`.
  std::filesystem::path input;
  MaskOption masks;
  std::size_t b = 8;
  std::vector<std::size_t> b_list{8, 16, 24};
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  SolverKind solver = SolverKind::gap;
  GapConfig gap;
  AdmmConfig admm;
  DenoiserBinding denoiser;
  ColorModeOption color_mode = ColorModeOption::gray;
  Demosaicer demosaicer = Demosaicer::malvar;
  bool warm_start = false;
  std::optional<WarmupOption> warmup;
  WarmRestart warm_restart;
  /// Manifest written by `simulate`; defaults to <out>/manifest.json.
  std::filesystem::path manifest;
  std::filesystem::path out = "out";
  bool timing = false;
  bool write_frames = false;

  void validate() const;
  bool color() const { return color_mode != ColorModeOption::gray; }
};

/// Strict parse: unknown keys and wrong types raise ErrorKind::config.
BenchConfig parse_config(const nlohmann::json& j);
BenchConfig load_config(const std::filesystem::path& path);
/// Every effective parameter, in the same schema parse_config accepts.
nlohmann::ordered_json to_json(const BenchConfig& cfg);

/// Noise seed of measurement t; recorded in the manifest.
std::uint64_t noise_seed(std::uint64_t seed, std::size_t t);

/// 0 ok, 1 divergence, 2 I/O or config, 3 bridge.
int exit_code(ErrorKind kind);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sci::cli

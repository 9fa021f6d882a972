#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "sci/bridge.hpp"
#include "sci/container_io.hpp"
#include "sci/forward_model.hpp"
#include "sci/log.hpp"
#include "sci/metrics.hpp"
#include "sci/report.hpp"

namespace sci::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(ColorModeOption m) {
  switch (m) {
    case ColorModeOption::gray: return "gray";
    case ColorModeOption::channelwise: return "channelwise";
    case ColorModeOption::joint_periter: return "joint_periter";
    case ColorModeOption::joint_halfres: return "joint_halfres";
  }
  return "?";
}

ColorModeOption color_mode_from_string(const std::string& name) {
  for (auto m : {ColorModeOption::gray, ColorModeOption::channelwise,
                 ColorModeOption::joint_periter, ColorModeOption::joint_halfres})
    if (name == to_string(m)) return m;
  fail(ErrorKind::config, "unknown color mode '" + name +
                              "' (expected gray, channelwise, joint_periter or joint_halfres)");
}

std::uint64_t noise_seed(std::uint64_t seed, std::size_t t) { return seed + 1 + t; }

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::diverged: return 1;
    case ErrorKind::denoiser_failure:
    case ErrorKind::bridge_timeout:
    case ErrorKind::bridge_protocol:
    case ErrorKind::bridge_io:
    case ErrorKind::bridge_non_finite: return 3;
    default: return 2;
  }
}

// ---- config parsing -------------------------------------------------------

namespace {

// Typed access to one JSON object that rejects keys nobody asked about.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorKind::config, where_ + ": expected an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key))
        fail(ErrorKind::config, "unknown key '" + key + "' in " + where_);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& dst) {
    if (!has(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::config, path(key) + ": wrong type");
    }
  }

  void get_number(const std::string& key, double& dst) {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) fail(ErrorKind::config, path(key) + ": expected a number");
    dst = j_.at(key).get<double>();
  }

  template <class Int>
  void get_count(const std::string& key, Int& dst) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      fail(ErrorKind::config, path(key) + ": expected a non-negative integer");
    dst = v.get<Int>();
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

SceneSpec parse_scene(const json& j) {
  Section s(j, "scene");
  SceneSpec out;
  std::string kind = to_string(out.kind);
  s.get("kind", kind);
  out.kind = scene_kind_from_string(kind);
  s.get_count("nx", out.nx);
  s.get_count("ny", out.ny);
  s.get_count("frames", out.frames);
  s.get("velocity", out.velocity);
  s.get_count("seed", out.seed);
  return out;
}

MaskOption parse_masks(const json& j) {
  Section s(j, "masks");
  MaskOption out;
  s.get("kind", out.kind);
  s.get_number("p", out.p);
  std::string path;
  s.get("path", path);
  out.path = path;
  if (out.kind != "bernoulli" && out.kind != "shifting" && out.kind != "file")
    fail(ErrorKind::config, "masks.kind: expected bernoulli, shifting or file, got '" + out.kind + "'");
  if (out.kind == "file" && out.path.empty())
    fail(ErrorKind::config, "masks.path is required when masks.kind is 'file'");
  return out;
}

InitKind parse_init(const std::string& s, const std::string& where) {
  if (s == "adjoint") return InitKind::adjoint;
  if (s == "zeros") return InitKind::zeros;
  fail(ErrorKind::config, where + ": init must be 'adjoint' or 'zeros'");
}

GapConfig parse_gap(const json& j) {
  Section s(j, "gap");
  GapConfig g;
  s.get_number("lambda0", g.lambda0);
  s.get_number("xi", g.xi);
  s.get_number("eta", g.eta);
  std::string schedule = to_string(g.schedule);
  s.get("schedule", schedule);
  if (schedule == "monotone") g.schedule = LambdaSchedule::monotone;
  else if (schedule == "adaptive") g.schedule = LambdaSchedule::adaptive;
  else fail(ErrorKind::config, "gap.schedule: expected monotone or adaptive");
  s.get("max_iters", g.max_iters);
  s.get_number("sigma_floor", g.sigma_floor);
  s.get_number("delta_tol", g.delta_tol);
  std::string init = to_string(g.init);
  s.get("init", init);
  g.init = parse_init(init, "gap");
  return g;
}

AdmmConfig parse_admm(const json& j) {
  Section s(j, "admm");
  AdmmConfig a;
  s.get_number("rho0", a.rho0);
  s.get_number("gamma", a.gamma);
  s.get_number("lambda", a.lambda);
  s.get("max_iters", a.max_iters);
  s.get_number("sigma_floor", a.sigma_floor);
  s.get_number("delta_tol", a.delta_tol);
  std::string init = to_string(a.init);
  s.get("init", init);
  a.init = parse_init(init, "admm");
  return a;
}

DenoiserBinding parse_denoiser(const json& j, const std::string& where) {
  Section s(j, where);
  DenoiserBinding d;
  std::string kind = to_string(d.kind);
  s.get("kind", kind);
  d.kind = denoiser_kind_from_string(kind);
  s.get_number("scale", d.tv.scale);
  s.get("iters", d.tv.iters);
  s.get("axis_weights", d.tv.axis_weights);
  s.get("endpoint", d.endpoint);
  s.get("timeout_ms", d.timeout_ms);
  s.get("switch_at", d.switch_at);
  if (s.has("then")) d.then.push_back(parse_denoiser(s.raw("then"), where + ".then"));
  return d;
}

ordered_json denoiser_json(const DenoiserBinding& d) {
  ordered_json j{{"kind", to_string(d.kind)},
                 {"scale", d.tv.scale},
                 {"iters", d.tv.iters},
                 {"axis_weights", d.tv.axis_weights}};
  if (d.kind == DenoiserKind::external) {
    j["endpoint"] = d.endpoint;
    j["timeout_ms"] = d.timeout_ms;
  }
  if (d.switch_at >= 0) {
    j["switch_at"] = d.switch_at;
    j["then"] = denoiser_json(d.then.front());
  }
  return j;
}

void set_color_flag(DenoiserBinding& d, bool color) {
  d.color = color;
  for (auto& t : d.then) set_color_flag(t, color);
}

}  // namespace

void BenchConfig::validate() const {
  if (b < 1) fail(ErrorKind::config, "b must be >= 1");
  for (std::size_t v : b_list)
    if (v < 1) fail(ErrorKind::config, "b_list entries must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    fail(ErrorKind::config, "noise_sigma must be finite and >= 0");
  gap.validate();
  admm.validate();
  denoiser.validate();
  if (warmup) {
    warmup->denoiser.validate();
    if (warmup->max_iters < 1) fail(ErrorKind::config, "warmup.max_iters must be >= 1");
  }
  if (warm_start && (solver != SolverKind::gap || color()))
    fail(ErrorKind::config, "warm_start is supported for the grayscale gap solver only");
  if (warmup && !warm_start) fail(ErrorKind::config, "warmup given without warm_start");
}

BenchConfig parse_config(const json& j) {
  BenchConfig c;
  Section s(j, "config");
  if (s.has("scene")) c.scene = parse_scene(s.raw("scene"));
  std::string input;
  s.get("input", input);
  c.input = input;
  if (s.has("masks")) c.masks = parse_masks(s.raw("masks"));
  s.get_count("b", c.b);
  s.get("b_list", c.b_list);
  s.get_number("noise_sigma", c.noise_sigma);
  s.get_count("seed", c.seed);
  std::string solver = to_string(c.solver);
  s.get("solver", solver);
  c.solver = solver_kind_from_string(solver);
  if (s.has("gap")) c.gap = parse_gap(s.raw("gap"));
  if (s.has("admm")) c.admm = parse_admm(s.raw("admm"));
  if (s.has("denoiser")) c.denoiser = parse_denoiser(s.raw("denoiser"), "denoiser");
  std::string mode = to_string(c.color_mode);
  s.get("color_mode", mode);
  c.color_mode = color_mode_from_string(mode);
  std::string demosaicer = to_string(c.demosaicer);
  s.get("demosaicer", demosaicer);
  c.demosaicer = demosaicer_from_string(demosaicer);
  s.get("warm_start", c.warm_start);
  if (s.has("warmup")) {
    Section w(s.raw("warmup"), "warmup");
    WarmupOption opt;
    if (w.has("denoiser")) opt.denoiser = parse_denoiser(w.raw("denoiser"), "warmup.denoiser");
    w.get("max_iters", opt.max_iters);
    c.warmup = opt;
  }
  if (s.has("warm_restart")) {
    const json& v = s.raw("warm_restart");
    if (v == "residual") c.warm_restart = {};
    else if (v == "resume") c.warm_restart = {WarmRestart::Kind::resume, 0.0};
    else if (v.is_number() && v.get<double>() > 0.0)
      c.warm_restart = {WarmRestart::Kind::fixed, v.get<double>()};
    else fail(ErrorKind::config, "warm_restart: expected \"residual\", \"resume\" or a positive lambda");
  }
  std::string manifest, out;
  s.get("manifest", manifest);
  c.manifest = manifest;
  out = c.out.string();
  s.get("out", out);
  c.out = out;
  s.get("timing", c.timing);
  s.get("write_frames", c.write_frames);
  return c;
}

BenchConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, "config '" + path.string() + "': " + e.what());
  }
  return parse_config(j);
}

ordered_json to_json(const BenchConfig& c) {
  ordered_json j;
  if (c.scene)
    j["scene"] = {{"kind", to_string(c.scene->kind)},
                  {"nx", c.scene->nx},
                  {"ny", c.scene->ny},
                  {"frames", c.scene->frames},
                  {"velocity", c.scene->velocity},
                  {"seed", c.scene->seed}};
  if (!c.input.empty()) j["input"] = c.input.string();
  j["masks"] = {{"kind", c.masks.kind}, {"p", c.masks.p}};
  if (c.masks.kind == "file") j["masks"]["path"] = c.masks.path.string();
  j["b"] = c.b;
  j["b_list"] = c.b_list;
  j["noise_sigma"] = c.noise_sigma;
  j["seed"] = c.seed;
  j["solver"] = to_string(c.solver);
  j["gap"] = {{"lambda0", c.gap.lambda0},     {"xi", c.gap.xi},
              {"eta", c.gap.eta},             {"schedule", to_string(c.gap.schedule)},
              {"max_iters", c.gap.max_iters}, {"sigma_floor", c.gap.sigma_floor},
              {"delta_tol", c.gap.delta_tol}, {"init", to_string(c.gap.init)}};
  j["admm"] = {{"rho0", c.admm.rho0},           {"gamma", c.admm.gamma},
               {"lambda", c.admm.lambda},       {"max_iters", c.admm.max_iters},
               {"sigma_floor", c.admm.sigma_floor}, {"delta_tol", c.admm.delta_tol},
               {"init", to_string(c.admm.init)}};
  j["denoiser"] = denoiser_json(c.denoiser);
  j["color_mode"] = to_string(c.color_mode);
  j["demosaicer"] = to_string(c.demosaicer);
  j["warm_start"] = c.warm_start;
  if (c.warmup)
    j["warmup"] = {{"denoiser", denoiser_json(c.warmup->denoiser)},
                   {"max_iters", c.warmup->max_iters}};
  switch (c.warm_restart.kind) {
    case WarmRestart::Kind::residual: j["warm_restart"] = "residual"; break;
    case WarmRestart::Kind::resume: j["warm_restart"] = "resume"; break;
    case WarmRestart::Kind::fixed: j["warm_restart"] = c.warm_restart.lambda; break;
  }
  if (!c.manifest.empty()) j["manifest"] = c.manifest.string();
  j["out"] = c.out.string();
  j["timing"] = c.timing;
  j["write_frames"] = c.write_frames;
  return j;
}

namespace {

// Artifacts must not depend on where they were written.
json artifact_config(const BenchConfig& c) {
  json j = to_json(c);
  j.erase("out");
  return j;
}

}  // namespace

// ---- shared helpers -------------------------------------------------------

namespace {

using Source = std::variant<VideoCube, ColorVideoCube>;

std::string indexed(const std::string& stem, std::size_t t, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%04zu", t);
  return stem + buf + ext;
}

Source load_any_video(const fs::path& path) {
  if (fs::is_regular_file(path)) {
    AnyContainer c = load_container(path);
    if (auto* v = std::get_if<VideoCube>(&c)) return std::move(*v);
    if (auto* v = std::get_if<ColorVideoCube>(&c)) return std::move(*v);
    if (auto* v = std::get_if<BayerVideo>(&c)) return VideoCube(std::move(*v));
    fail(ErrorKind::invalid_argument, "'" + path.string() + "' is not a video container");
  }
  return load_image_sequence(path);
}

std::size_t frame_count(const Source& s) {
  return std::visit([](const auto& v) { return v.frames(); }, s);
}

Source slice(const Source& s, std::size_t first, std::size_t count) {
  return std::visit(
      [&](const auto& v) -> Source {
        using T = std::decay_t<decltype(v)>;
        const std::size_t per = v.dims().plane_size() * v.dims().channels;
        std::vector<double> vals(v.values().begin() + first * per,
                                 v.values().begin() + (first + count) * per);
        return T(v.nx(), v.ny(), count, std::move(vals));
      },
      s);
}

Source load_source(const BenchConfig& cfg, std::optional<std::size_t> frames_override) {
  if (!cfg.input.empty()) return load_any_video(cfg.input);
  SceneSpec scene = cfg.scene.value_or(SceneSpec{});
  if (!cfg.scene && cfg.color()) scene.kind = SceneKind::moving_square_color;
  if (frames_override) scene.frames = *frames_override;
  else if (!cfg.scene) scene.frames = cfg.b;
  return make_synthetic_video(scene);
}

void check_source_kind(const BenchConfig& cfg, const Source& s) {
  const bool color = std::holds_alternative<ColorVideoCube>(s);
  if (color != cfg.color())
    fail(ErrorKind::config, std::string("color_mode '") + to_string(cfg.color_mode) +
                                "' does not fit a " + (color ? "color" : "grayscale") +
                                " source video");
}

MaskCube make_masks(const BenchConfig& cfg, std::size_t nx, std::size_t ny, std::size_t b) {
  if (cfg.masks.kind == "file") {
    MaskCube m = load_masks(cfg.masks.path);
    if (m.dims() != Dims{nx, ny, 1, b})
      fail(ErrorKind::shape_mismatch, "mask file '" + cfg.masks.path.string() + "' has shape " +
                                          to_string(m.dims()) + ", expected " +
                                          to_string(Dims{nx, ny, 1, b}));
    return m;
  }
  MaskSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.frames = b;
  spec.seed = cfg.seed;
  if (cfg.masks.kind == "shifting") spec.kind = ShiftingMasks{};
  else spec.kind = BernoulliMasks{cfg.masks.p};
  return generate_masks(spec);
}

Measurement simulate(const Source& s, const MaskCube& masks, double sigma, std::uint64_t seed) {
  return std::visit([&](const auto& v) { return simulate_measurement(v, masks, sigma, seed); }, s);
}

struct Reconstruction {
  Source estimate;
  std::vector<std::pair<std::string, RunReport>> reports;  // (suffix, report)
  double init_psnr = std::numeric_limits<double>::quiet_NaN();
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double ssim = std::numeric_limits<double>::quiet_NaN();
};

ColorSolveConfig color_cfg(const BenchConfig& cfg) {
  ColorSolveConfig c;
  c.solver = cfg.solver;
  c.gap = cfg.gap;
  c.admm = cfg.admm;
  c.demosaicer = cfg.demosaicer;
  c.mode = cfg.color_mode == ColorModeOption::joint_halfres ? ColorMode::halfres_proxy
                                                            : ColorMode::per_iteration;
  return c;
}

double init_psnr_of(const Measurement& y, const SensingOperator& op, const BenchConfig& cfg,
                    const std::optional<Source>& truth) {
  if (!truth) return std::numeric_limits<double>::quiet_NaN();
  VideoCube v0 = initial_iterate(y, op, cfg.gap.init, std::nullopt);
  if (cfg.solver == SolverKind::admm) v0 = initial_iterate(y, op, cfg.admm.init, std::nullopt);
  if (const auto* gray = std::get_if<VideoCube>(&*truth)) {
    clip_unit(v0.values());
    return video_metrics(*gray, v0).mean_psnr;
  }
  ColorVideoCube c = demosaic(v0, cfg.demosaicer);
  clip_unit(c.values());
  return video_metrics(std::get<ColorVideoCube>(*truth), c).mean_psnr;
}

Reconstruction reconstruct_one(const BenchConfig& cfg, const Measurement& y,
                               const MaskCube& masks, const std::optional<Source>& truth,
                               Denoiser& denoiser) {
  const SensingOperator op(masks);
  Reconstruction r;
  r.init_psnr = init_psnr_of(y, op, cfg, truth);
  if (!cfg.color()) {
    std::optional<VideoCube> gt;
    if (truth) gt = std::get<VideoCube>(*truth);
    SolveResult s = cfg.solver == SolverKind::gap ? gap_solve(y, op, denoiser, cfg.gap, gt)
                                                  : admm_solve(y, op, denoiser, cfg.admm, gt);
    r.psnr = s.report.final_psnr;
    r.ssim = s.report.final_ssim;
    r.reports.emplace_back("", std::move(s.report));
    r.estimate = std::move(s.estimate);
    return r;
  }
  std::optional<ColorVideoCube> gt;
  if (truth) gt = std::get<ColorVideoCube>(*truth);
  ColorSolveResult s = cfg.color_mode == ColorModeOption::channelwise
                           ? channelwise_color_solve(y, masks, denoiser, color_cfg(cfg), gt)
                           : joint_color_solve(y, masks, denoiser, color_cfg(cfg), gt);
  static const std::array<const char*, 4> kSuffix{"_r", "_g1", "_g2", "_b"};
  for (std::size_t k = 0; k < s.reports.size(); ++k)
    r.reports.emplace_back(s.reports.size() == 4 ? kSuffix[k] : "", std::move(s.reports[k]));
  r.psnr = s.final_psnr;
  r.ssim = s.final_ssim;
  r.estimate = std::move(s.estimate);
  return r;
}

ReportOptions report_options(const BenchConfig& cfg) {
  ReportOptions o;
  o.timing = cfg.timing;
  if (cfg.color()) o.metric_convention = kColorMetricConvention;
  return o;
}

void save_source(const Source& s, const fs::path& path) {
  std::visit([&](const auto& v) { save_container(v, path); }, s);
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- verbs ----------------------------------------------------------------

int cmd_simulate(const BenchConfig& cfg, std::ostream& out) {
  const Source video = load_source(cfg, std::nullopt);
  check_source_kind(cfg, video);
  const std::size_t frames = frame_count(video);
  if (frames < cfg.b)
    fail(ErrorKind::config, "insufficient frames: the source has " + std::to_string(frames) +
                                " frame(s) but B = " + std::to_string(cfg.b));
  const std::size_t count = frames / cfg.b;
  const std::size_t dropped = frames % cfg.b;
  if (dropped > 0) warn(std::to_string(dropped) + " frame(s) dropped (not a multiple of B)");

  const auto [nx, ny] = std::visit([](const auto& v) { return std::pair{v.nx(), v.ny()}; }, video);
  fs::create_directories(cfg.out);
  const MaskCube masks = make_masks(cfg, nx, ny, cfg.b);
  save_container(masks, cfg.out / "masks.sci1");

  ordered_json manifest;
  manifest["format"] = "sci-manifest";
  manifest["version"] = 1;
  manifest["config"] = artifact_config(cfg);
  manifest["b"] = cfg.b;
  manifest["color"] = cfg.color();
  manifest["dropped_frames"] = dropped;
  manifest["masks"] = "masks.sci1";
  auto& list = manifest["measurements"] = ordered_json::array();
  for (std::size_t t = 0; t < count; ++t) {
    const Source part = slice(video, t * cfg.b, cfg.b);
    const std::uint64_t ns = noise_seed(cfg.seed, t);
    const Measurement y = simulate(part, masks, cfg.noise_sigma, ns);
    const std::string meas = indexed("meas", t, ".sci1");
    const std::string truth = indexed("truth", t, ".sci1");
    save_container(y, cfg.out / meas);
    save_source(part, cfg.out / truth);
    list.push_back({{"index", t},
                    {"first_frame", t * cfg.b},
                    {"measurement", meas},
                    {"truth", truth},
                    {"noise_seed", ns}});
  }
  write_json(cfg.out / "manifest.json", manifest);
  out << "simulated " << count << " measurement(s) of B=" << cfg.b << " into "
      << cfg.out.string() << "\n";
  return 0;
}

struct ManifestEntry {
  fs::path measurement;
  std::optional<fs::path> truth;
};

struct Manifest {
  fs::path masks;
  bool color = false;
  std::vector<ManifestEntry> entries;
};

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open manifest '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
    Manifest m;
    const fs::path dir = path.parent_path();
    m.masks = dir / j.at("masks").get<std::string>();
    m.color = j.at("color").get<bool>();
    for (const json& e : j.at("measurements")) {
      ManifestEntry entry{dir / e.at("measurement").get<std::string>(), std::nullopt};
      if (e.contains("truth")) entry.truth = dir / e.at("truth").get<std::string>();
      m.entries.push_back(std::move(entry));
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "manifest '" + path.string() + "': " + e.what());
  }
}

DenoiserBinding effective_binding(const BenchConfig& cfg) {
  DenoiserBinding d = cfg.denoiser;
  // The channel-wise baseline runs grayscale solves on the sub-lattices.
  set_color_flag(d, cfg.color_mode == ColorModeOption::joint_periter ||
                        cfg.color_mode == ColorModeOption::joint_halfres);
  return d;
}

void write_reports(const BenchConfig& cfg, std::size_t t, const Reconstruction& r) {
  const ReportOptions opts = report_options(cfg);
  for (const auto& [suffix, rep] : r.reports) {
    write_text(cfg.out / indexed("report", t, suffix + ".csv"), report_csv(rep, opts));
    write_json(cfg.out / indexed("report", t, suffix + ".json"), report_json(rep, opts));
  }
  save_source(r.estimate, cfg.out / indexed("recon", t, ".sci1"));
  if (cfg.write_frames)
    std::visit([&](const auto& v) { save_image_sequence(v, cfg.out / indexed("recon", t, "")); },
               r.estimate);
}

int cmd_reconstruct(const BenchConfig& cfg, std::ostream& out) {
  const fs::path manifest_path = cfg.manifest.empty() ? cfg.out / "manifest.json" : cfg.manifest;
  const Manifest m = read_manifest(manifest_path);
  if (m.color != cfg.color())
    fail(ErrorKind::config, std::string("color_mode '") + to_string(cfg.color_mode) +
                                "' does not fit the " + (m.color ? "color" : "grayscale") +
                                " measurements of '" + manifest_path.string() + "'");
  const MaskCube masks = load_masks(m.masks);
  std::vector<Measurement> ys;
  std::vector<std::optional<Source>> truths;
  for (const ManifestEntry& e : m.entries) {
    Measurement y = load_measurement(e.measurement);
    if (y.nx() != masks.nx() || y.ny() != masks.ny())
      fail(ErrorKind::shape_mismatch, "measurement '" + e.measurement.string() + "' " +
                                          to_string(y.dims()) + " vs masks '" + m.masks.string() +
                                          "' " + to_string(masks.dims()));
    ys.push_back(std::move(y));
    truths.push_back(e.truth ? std::optional<Source>(load_any_video(*e.truth)) : std::nullopt);
  }
  fs::create_directories(cfg.out);
  auto denoiser = make_denoiser(effective_binding(cfg));

  std::vector<Reconstruction> results;
  if (cfg.warm_start) {
    std::unique_ptr<Denoiser> warm_denoiser;
    std::optional<WarmupRun> warmup;
    if (cfg.warmup) {
      warm_denoiser = make_denoiser(cfg.warmup->denoiser);
      GapConfig wc = cfg.gap;
      wc.max_iters = cfg.warmup->max_iters;
      warmup = WarmupRun{wc, warm_denoiser.get()};
    }
    std::vector<std::optional<VideoCube>> gts;
    for (const auto& t : truths)
      gts.push_back(t ? std::optional<VideoCube>(std::get<VideoCube>(*t)) : std::nullopt);
    const SensingOperator op(masks);
    auto solved = warm_start_sequence(ys, op, *denoiser, cfg.gap, warmup, gts,
                                      cfg.warm_restart);
    for (std::size_t t = 0; t < solved.size(); ++t) {
      Reconstruction r;
      r.init_psnr = init_psnr_of(ys[t], op, cfg, truths[t]);
      r.psnr = solved[t].report.final_psnr;
      r.ssim = solved[t].report.final_ssim;
      r.reports.emplace_back("", std::move(solved[t].report));
      r.estimate = std::move(solved[t].estimate);
      results.push_back(std::move(r));
    }
  } else {
    for (std::size_t t = 0; t < ys.size(); ++t) {
      try {
        results.push_back(reconstruct_one(cfg, ys[t], masks, truths[t], *denoiser));
      } catch (const Error& e) {
        throw Error(e.kind(), "measurement " + std::to_string(t) + ": " + e.what());
      }
    }
  }

  std::string summary;
  if (cfg.color()) summary += std::string("# metrics: ") + kColorMetricConvention + "\n";
  summary += "measurement,init_psnr,psnr,ssim,iterations\n";
  ordered_json sj;
  sj["config"] = artifact_config(cfg);
  if (cfg.color()) sj["metric_convention"] = kColorMetricConvention;
  auto& rows = sj["measurements"] = ordered_json::array();
  double sum_init = 0.0, sum_psnr = 0.0, sum_ssim = 0.0;
  for (std::size_t t = 0; t < results.size(); ++t) {
    const Reconstruction& r = results[t];
    write_reports(cfg, t, r);
    const std::size_t iters = r.reports.front().second.iterations.size();
    summary += std::to_string(t) + "," + format_number(r.init_psnr) + "," +
               format_number(r.psnr) + "," + format_number(r.ssim) + "," +
               std::to_string(iters) + "\n";
    rows.push_back({{"index", t},
                    {"init_psnr", json_number(r.init_psnr)},
                    {"psnr", json_number(r.psnr)},
                    {"ssim", json_number(r.ssim)},
                    {"iterations", iters}});
    sum_init += r.init_psnr;
    sum_psnr += r.psnr;
    sum_ssim += r.ssim;
  }
  const double n = static_cast<double>(results.size());
  summary += "mean," + format_number(sum_init / n) + "," + format_number(sum_psnr / n) + "," +
             format_number(sum_ssim / n) + ",\n";
  sj["mean"] = {{"init_psnr", json_number(sum_init / n)},
                {"psnr", json_number(sum_psnr / n)},
                {"ssim", json_number(sum_ssim / n)}};
  write_text(cfg.out / "summary.csv", summary);
  write_json(cfg.out / "summary.json", sj);
  out << summary;
  return 0;
}

int cmd_sweep_b(const BenchConfig& cfg, std::ostream& out) {
  if (cfg.b_list.empty()) fail(ErrorKind::config, "b_list is empty");
  if (cfg.masks.kind == "file")
    fail(ErrorKind::config, "sweep-b regenerates masks per B; masks.kind 'file' is not allowed");
  fs::create_directories(cfg.out);
  auto denoiser = make_denoiser(effective_binding(cfg));

  std::string csv;
  if (cfg.color()) csv += std::string("# metrics: ") + kColorMetricConvention + "\n";
  csv += "B,psnr,ssim,seconds\n";
  ordered_json j;
  j["config"] = artifact_config(cfg);
  if (cfg.color()) j["metric_convention"] = kColorMetricConvention;
  auto& rows = j["rows"] = ordered_json::array();
  std::optional<Source> loaded;
  if (!cfg.input.empty()) loaded = load_any_video(cfg.input);
  for (std::size_t b : cfg.b_list) {
    const auto t0 = std::chrono::steady_clock::now();
    Source video;
    if (loaded) {
      if (frame_count(*loaded) < b)
        fail(ErrorKind::config, "insufficient frames: input has " +
                                    std::to_string(frame_count(*loaded)) + " but B = " +
                                    std::to_string(b));
      video = slice(*loaded, 0, b);
    } else {
      video = load_source(cfg, b);
    }
    check_source_kind(cfg, video);
    const auto [nx, ny] =
        std::visit([](const auto& v) { return std::pair{v.nx(), v.ny()}; }, video);
    const MaskCube masks = make_masks(cfg, nx, ny, b);
    const Measurement y = simulate(video, masks, cfg.noise_sigma, noise_seed(cfg.seed, 0));
    Reconstruction r;
    try {
      r = reconstruct_one(cfg, y, masks, video, *denoiser);
    } catch (const Error& e) {
      throw Error(e.kind(), "B=" + std::to_string(b) + ": " + e.what());
    }
    const double secs = cfg.timing ? seconds_since(t0) : 0.0;
    csv += std::to_string(b) + "," + format_number(r.psnr) + "," + format_number(r.ssim) + "," +
           format_number(secs) + "\n";
    rows.push_back({{"B", b},
                    {"psnr", json_number(r.psnr)},
                    {"ssim", json_number(r.ssim)},
                    {"seconds", secs}});
  }
  write_text(cfg.out / "sweep_b.csv", csv);
  write_json(cfg.out / "sweep_b.json", j);
  out << csv;
  return 0;
}

int cmd_metrics(const fs::path& ref_path, const fs::path& test_path, const fs::path& out_dir,
                std::ostream& out) {
  const Source ref = load_any_video(ref_path);
  const Source test = load_any_video(test_path);
  if (ref.index() != test.index())
    fail(ErrorKind::shape_mismatch, "metrics: one input is color and the other grayscale");
  const MetricReport m = std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        return video_metrics(a, std::get<T>(test));
      },
      ref);
  std::string csv;
  if (!m.color_convention.empty()) csv += "# metrics: " + m.color_convention + "\n";
  csv += "frame,psnr,ssim\n";
  for (std::size_t b = 0; b < m.psnr.size(); ++b)
    csv += std::to_string(b) + "," + format_number(m.psnr[b]) + "," + format_number(m.ssim[b]) + "\n";
  csv += "mean," + format_number(m.mean_psnr) + "," + format_number(m.mean_ssim) + "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(out_dir / "metrics.csv", csv);
  }
  out << csv;
  return 0;
}

int cmd_serve_check(const std::string& endpoint, int timeout_ms, std::ostream& out) {
  if (endpoint.empty())
    fail(ErrorKind::config, "serve-check needs --endpoint or denoiser.endpoint in the config");
  out << bridge::handshake(endpoint, timeout_ms) << "\n";
  return 0;
}

}  // namespace

// ---- entry point ----------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Snapshot compressive imaging simulation and reconstruction"};
  app.require_subcommand(1);

  struct Overrides {
    std::string config, solver, denoiser, b, color_mode, out;
    std::optional<std::uint64_t> seed;
    bool warm_start = false;
  } ov;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", ov.config, "JSON config file");
    sub->add_option("--solver", ov.solver, "gap or admm");
    sub->add_option("--denoiser", ov.denoiser, "identity, clip, tv2d, tv3d or external");
    sub->add_option("--b", ov.b, "compression rate; a comma list for sweep-b");
    sub->add_option("--seed", ov.seed, "master seed");
    sub->add_option("--color-mode", ov.color_mode,
                    "gray, channelwise, joint_periter or joint_halfres");
    sub->add_flag("--warm-start", ov.warm_start, "sequential warm start across measurements");
    sub->add_option("--out", ov.out, "output directory");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "write masks, measurements and a manifest");
  CLI::App* reconstruct = app.add_subcommand("reconstruct", "reconstruct the measurements of a manifest");
  CLI::App* sweep = app.add_subcommand("sweep-b", "PSNR/SSIM versus compression rate B");
  for (CLI::App* s : {simulate, reconstruct, sweep}) add_common(s);

  std::string ref, test, metrics_out;
  CLI::App* metrics = app.add_subcommand("metrics", "per-frame PSNR/SSIM of two videos");
  metrics->add_option("reference", ref, "reference video (SCI1 file or raster prefix)")->required();
  metrics->add_option("test", test, "test video (SCI1 file or raster prefix)")->required();
  metrics->add_option("--out", metrics_out, "also write metrics.csv here");

  std::string endpoint, check_config;
  int timeout_ms = 10000;
  CLI::App* serve = app.add_subcommand("serve-check", "handshake with a denoiser sidecar");
  serve->add_option("--endpoint", endpoint, "stdio:<command> or tcp:<host>:<port>");
  serve->add_option("--timeout-ms", timeout_ms, "round-trip deadline");
  serve->add_option("--config", check_config, "take the endpoint from denoiser.endpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  const WarningSink previous = set_warning_sink([&err](const std::string& m) {
    err << "warning: " << m << "\n";
  });
  struct Restore {
    WarningSink sink;
    ~Restore() { set_warning_sink(std::move(sink)); }
  } restore{previous};

  try {
    if (metrics->parsed()) return cmd_metrics(ref, test, metrics_out, out);
    if (serve->parsed()) {
      if (endpoint.empty() && !check_config.empty()) {
        const BenchConfig c = load_config(check_config);
        endpoint = c.denoiser.endpoint;
      }
      return cmd_serve_check(endpoint, timeout_ms, out);
    }

    BenchConfig cfg = ov.config.empty() ? BenchConfig{} : load_config(ov.config);
    if (!ov.solver.empty()) cfg.solver = solver_kind_from_string(ov.solver);
    if (!ov.denoiser.empty()) cfg.denoiser.kind = denoiser_kind_from_string(ov.denoiser);
    if (!ov.color_mode.empty()) cfg.color_mode = color_mode_from_string(ov.color_mode);
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.warm_start) cfg.warm_start = true;
    if (!ov.out.empty()) cfg.out = ov.out;
    if (!ov.b.empty()) {
      std::vector<std::size_t> values;
      std::stringstream ss(ov.b);
      for (std::string item; std::getline(ss, item, ',');) {
        try {
          std::size_t used = 0;
          const long long v = std::stoll(item, &used);
          if (used != item.size() || v < 1) throw std::invalid_argument(item);
          values.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
          fail(ErrorKind::config, "--b: '" + item + "' is not a positive integer");
        }
      }
      if (values.empty()) fail(ErrorKind::config, "--b: no values");
      if (sweep->parsed()) cfg.b_list = values;
      else if (values.size() != 1) fail(ErrorKind::config, "--b takes one value outside sweep-b");
      else cfg.b = values.front();
    }
    cfg.validate();

    if (simulate->parsed()) return cmd_simulate(cfg, out);
    if (reconstruct->parsed()) return cmd_reconstruct(cfg, out);
    return cmd_sweep_b(cfg, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return 2;
  }
}

}  // namespace sci::cli

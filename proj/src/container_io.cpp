#include "sci/container_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <regex>
#include <sstream>

namespace sci {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'C', 'I', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kPatternRggb = 0;
constexpr std::uint8_t kPatternNone = 255;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | p[k];
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | p[k];
  return v;
}

const Array4& storage(const AnyContainer& a) {
  return std::visit([](const auto& x) -> const Array4& { return x; }, a);
}

// File dims: 3-D kinds put B in the third slot and 1 in the fourth.
std::array<std::uint32_t, 4> file_dims(ContainerKind kind, const Dims& d) {
  auto u = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  switch (kind) {
    case ContainerKind::color: return {u(d.nx), u(d.ny), u(d.channels), u(d.frames)};
    case ContainerKind::measurement: return {u(d.nx), u(d.ny), 1, 1};
    default: return {u(d.nx), u(d.ny), u(d.frames), 1};
  }
}

std::vector<double> to_doubles(const std::uint8_t* p, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = static_cast<double>(std::bit_cast<float>(get_u32(p + 4 * k)));
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace

ContainerKind kind_of(const AnyContainer& array) {
  return static_cast<ContainerKind>(array.index());
}

std::vector<std::uint8_t> encode_container(const AnyContainer& array) {
  const Array4& a = storage(array);
  validate_finite(a, "save_container");
  const ContainerKind kind = kind_of(array);

  std::vector<std::uint8_t> out;
  out.reserve(kContainerHeaderBytes + 4 * a.size());
  for (std::uint8_t m : kMagic) out.push_back(m);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(kind));
  out.push_back(kind == ContainerKind::bayer ? kPatternRggb : kPatternNone);
  out.push_back(0);
  for (std::uint32_t d : file_dims(kind, a.dims())) put_u32(out, d);
  put_u64(out, a.size());
  for (double v : a.values())
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

AnyContainer decode_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    fail(ErrorKind::bad_magic, "bad magic");
  if (bytes.size() < kContainerHeaderBytes)
    fail(ErrorKind::truncated, "truncated header");
  const std::uint8_t* p = bytes.data();
  if (p[4] != kVersion)
    fail(ErrorKind::invalid_argument, "unsupported version " + std::to_string(p[4]));
  if (p[5] > static_cast<std::uint8_t>(ContainerKind::bayer))
    fail(ErrorKind::invalid_argument, "unknown kind " + std::to_string(p[5]));
  const auto kind = static_cast<ContainerKind>(p[5]);

  const std::size_t d0 = get_u32(p + 8), d1 = get_u32(p + 12),
                    d2 = get_u32(p + 16), d3 = get_u32(p + 20);
  const std::uint64_t count = get_u64(p + 24);
  unsigned __int128 product = 1;
  for (std::size_t d : {d0, d1, d2, d3}) product *= d;
  if (product != count)
    fail(ErrorKind::invalid_argument, "payload length disagrees with dims");
  if (count > (bytes.size() - kContainerHeaderBytes) / 4)
    fail(ErrorKind::truncated, "truncated payload: expected " +
                                   std::to_string(count) + " elements");
  std::vector<double> vals = to_doubles(p + kContainerHeaderBytes, count);
  for (double v : vals)
    if (!std::isfinite(v)) fail(ErrorKind::non_finite, "non-finite payload entry");

  switch (kind) {
    case ContainerKind::video: {
      VideoCube v(d0, d1, d2, std::move(vals));
      validate_signal(v, "video container");
      return v;
    }
    case ContainerKind::mask:
      return MaskCube(d0, d1, d2, std::move(vals));
    case ContainerKind::measurement:
      return Measurement(d0, d1, std::move(vals));
    case ContainerKind::color: {
      if (d2 != 3) fail(ErrorKind::invalid_argument, "color container needs 3 channels");
      ColorVideoCube c(d0, d1, d3, std::move(vals));
      validate_signal(c, "color container");
      return c;
    }
    case ContainerKind::bayer:
      if (p[6] != kPatternRggb)
        fail(ErrorKind::invalid_argument, "only RGGB Bayer data is supported");
      return BayerVideo(d0, d1, d2, std::move(vals));
  }
  fail(ErrorKind::invalid_argument, "unknown kind");
}

void save_container(const AnyContainer& array, const std::filesystem::path& path) {
  write_file(path, encode_container(array));
}

AnyContainer load_container(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_container(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

namespace {

template <class T>
T load_as(const std::filesystem::path& path, const char* expected) {
  AnyContainer any = load_container(path);
  if (auto* v = std::get_if<T>(&any)) return std::move(*v);
  fail(ErrorKind::invalid_argument,
       path.string() + ": expected a " + expected + " container");
}

}  // namespace

VideoCube load_video(const std::filesystem::path& path) {
  AnyContainer any = load_container(path);
  if (auto* v = std::get_if<VideoCube>(&any)) return std::move(*v);
  if (auto* b = std::get_if<BayerVideo>(&any)) return std::move(*b);
  fail(ErrorKind::invalid_argument, path.string() + ": expected a video container");
}

MaskCube load_masks(const std::filesystem::path& path) {
  return load_as<MaskCube>(path, "mask");
}

Measurement load_measurement(const std::filesystem::path& path) {
  return load_as<Measurement>(path, "measurement");
}

ColorVideoCube load_color_video(const std::filesystem::path& path) {
  return load_as<ColorVideoCube>(path, "color");
}

// ---- raster sequences -----------------------------------------------------

namespace {

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::filesystem::path frame_path(const std::filesystem::path& prefix,
                                 std::size_t b, const char* ext) {
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "_%04zu.%s", b, ext);
  return prefix.string() + suffix;
}

struct Raster {
  std::size_t nx = 0, ny = 0, channels = 0;
  std::vector<std::uint8_t> pixels;
};

Raster read_netpbm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok += static_cast<char>(bytes[pos++]);
    return tok;
  };
  const std::string magic = next_token();
  Raster r;
  if (magic == "P5") r.channels = 1;
  else if (magic == "P6") r.channels = 3;
  else fail(ErrorKind::bad_magic, path.string() + ": not a binary PGM/PPM file");
  try {
    r.ny = std::stoul(next_token());
    r.nx = std::stoul(next_token());
    if (std::stoul(next_token()) != 255)
      fail(ErrorKind::invalid_argument, path.string() + ": only 8-bit rasters are supported");
  } catch (const std::logic_error&) {
    fail(ErrorKind::invalid_argument, path.string() + ": malformed raster header");
  }
  ++pos;  // single whitespace before the raster
  const std::size_t need = r.nx * r.ny * r.channels;
  if (bytes.size() < pos + need) fail(ErrorKind::truncated, path.string() + ": truncated raster");
  r.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return r;
}

void write_netpbm(const std::filesystem::path& path, const Raster& r) {
  std::ostringstream header;
  header << (r.channels == 1 ? "P5" : "P6") << "\n" << r.ny << " " << r.nx << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  bytes.insert(bytes.end(), r.pixels.begin(), r.pixels.end());
  write_file(path, bytes);
}

}  // namespace

std::vector<std::filesystem::path> save_image_sequence(
    const VideoCube& video, const std::filesystem::path& prefix) {
  std::vector<std::filesystem::path> written;
  for (std::size_t b = 0; b < video.frames(); ++b) {
    Raster r{video.nx(), video.ny(), 1, {}};
    for (double v : video.frame(b)) r.pixels.push_back(quantize(v));
    written.push_back(frame_path(prefix, b, "pgm"));
    write_netpbm(written.back(), r);
  }
  return written;
}

std::vector<std::filesystem::path> save_image_sequence(
    const ColorVideoCube& video, const std::filesystem::path& prefix) {
  std::vector<std::filesystem::path> written;
  for (std::size_t b = 0; b < video.frames(); ++b) {
    Raster r{video.nx(), video.ny(), 3, {}};
    for (std::size_t i = 0; i < video.nx(); ++i)
      for (std::size_t j = 0; j < video.ny(); ++j)
        for (std::size_t c = 0; c < 3; ++c) r.pixels.push_back(quantize(video.at(i, j, c, b)));
    written.push_back(frame_path(prefix, b, "ppm"));
    write_netpbm(written.back(), r);
  }
  return written;
}

std::variant<VideoCube, ColorVideoCube> load_image_sequence(
    const std::filesystem::path& prefix) {
  const std::filesystem::path dir =
      prefix.has_parent_path() ? prefix.parent_path() : std::filesystem::path(".");
  const std::string stem = prefix.filename().string();
  const std::regex pattern(R"((.*)_(\d+)\.(pgm|ppm))");

  std::map<unsigned long, std::filesystem::path> frames;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern) && m[1] == stem)
      frames.emplace(std::stoul(m[2]), entry.path());
  }
  if (ec) fail(ErrorKind::io, "cannot list '" + dir.string() + "': " + ec.message());
  if (frames.empty())
    fail(ErrorKind::io, "no frames matching '" + prefix.string() + "_NNNN.pgm|ppm'");

  std::vector<Raster> rasters;
  for (const auto& [index, path] : frames) {
    rasters.push_back(read_netpbm(path));
    const Raster& r = rasters.back();
    const Raster& first = rasters.front();
    if (r.nx != first.nx || r.ny != first.ny || r.channels != first.channels)
      fail(ErrorKind::shape_mismatch, path.string() + ": frame shape differs from the first frame");
  }
  const Raster& first = rasters.front();
  const std::size_t frames_count = rasters.size();
  if (first.channels == 1) {
    VideoCube v(first.nx, first.ny, frames_count);
    for (std::size_t b = 0; b < frames_count; ++b) {
      auto f = v.frame(b);
      for (std::size_t k = 0; k < f.size(); ++k) f[k] = rasters[b].pixels[k] / 255.0;
    }
    return v;
  }
  ColorVideoCube v(first.nx, first.ny, frames_count);
  for (std::size_t b = 0; b < frames_count; ++b)
    for (std::size_t i = 0; i < first.nx; ++i)
      for (std::size_t j = 0; j < first.ny; ++j)
        for (std::size_t c = 0; c < 3; ++c)
          v.at(i, j, c, b) = rasters[b].pixels[(i * first.ny + j) * 3 + c] / 255.0;
  return v;
}

}  // namespace sci

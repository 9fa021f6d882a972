#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "sci/tensor.hpp"

namespace sci {

/// SCI1 container layout (little-endian):
///
///   offset  size  field
///   0       4     magic "SCI1"
///   4       1     version (1)
///   5       1     kind (see ContainerKind)
///   6       1     pattern (0 = RGGB for Bayer data, 255 otherwise)
///   7       1     reserved (0)
///   8       16    u32 dims: nx, ny, c_or_B, B (unused dims = 1)
///   24      8     u64 payload length in elements
///   32      4*N   float32 payload in tensor layout
enum class ContainerKind : std::uint8_t {
  video = 0,
  mask = 1,
  measurement = 2,
  color = 3,
  bayer = 4,
};

inline constexpr std::size_t kContainerHeaderBytes = 32;

using AnyContainer =
    std::variant<VideoCube, MaskCube, Measurement, ColorVideoCube, BayerVideo>;

std::vector<std::uint8_t> encode_container(const AnyContainer& array);
AnyContainer decode_container(std::span<const std::uint8_t> bytes);

void save_container(const AnyContainer& array, const std::filesystem::path& path);
AnyContainer load_container(const std::filesystem::path& path);

// Typed loaders; throw ErrorKind::invalid_argument when the stored kind differs.
VideoCube load_video(const std::filesystem::path& path);
MaskCube load_masks(const std::filesystem::path& path);
Measurement load_measurement(const std::filesystem::path& path);
ColorVideoCube load_color_video(const std::filesystem::path& path);

ContainerKind kind_of(const AnyContainer& array);

// 8-bit raster sequences: <prefix>_0000.pgm, <prefix>_0001.pgm, ... for
// grayscale and .ppm for RGB. Values are scaled by 1/255 on load and rounded
// from [0,1] on export.
std::vector<std::filesystem::path> save_image_sequence(
    const VideoCube& video, const std::filesystem::path& prefix);
std::vector<std::filesystem::path> save_image_sequence(
    const ColorVideoCube& video, const std::filesystem::path& prefix);
std::variant<VideoCube, ColorVideoCube> load_image_sequence(
    const std::filesystem::path& prefix);

}  // namespace sci

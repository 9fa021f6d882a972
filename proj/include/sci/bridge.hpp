#pragma once

// SCID v1: the wire protocol between the solvers and an out-of-process
// denoiser. Every message starts with the same 8-byte prefix
//
//   "SCID"  u8 version=1  u8 msg  u8 color  u8 reserved=0
//
// msg=1 (request) and msg=2 (ok response) continue with
//
//   u32 nx, u32 ny, u32 channels, u32 B, f32 sigma, u64 payload_len,
//   payload_len float32 values in tensor layout
//
// msg=255 (error response) continues with u32 code, u32 length, message bytes.
// All integers and floats are little-endian. One response per request.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sci/tensor.hpp"

namespace sci::bridge {

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kPrefixBytes = 8;
inline constexpr std::size_t kDenoiseHeaderBytes = 36;

enum class MessageType : std::uint8_t { denoise = 1, ok = 2, error = 255 };

enum class ErrorCode : std::uint32_t {
  bad_magic = 1,
  truncated = 2,
  unsupported_version = 3,
  bad_request = 4,
  model_failure = 5,
};

/// Header of a denoise request or ok response.
struct DenoiseHeader {
  MessageType type = MessageType::denoise;
  bool color = false;
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  std::uint32_t channels = 1;
  std::uint32_t frames = 1;
  float sigma = 0.0f;
  std::uint64_t payload_len = 0;

  bool same_dims(const DenoiseHeader& o) const {
    return nx == o.nx && ny == o.ny && channels == o.channels && frames == o.frames &&
           payload_len == o.payload_len;
  }
};

struct DenoiseMessage {
  DenoiseHeader header;
  std::vector<float> payload;
};

struct ErrorMessage {
  ErrorCode code = ErrorCode::bad_request;
  std::string text;
};

std::vector<std::uint8_t> encode(const DenoiseMessage& m);
std::vector<std::uint8_t> encode(const ErrorMessage& m);

/// Builds a request for a grayscale (channels=1) or color (channels=3) array.
DenoiseMessage make_request(const Array4& x, bool color, double sigma);

/// Parses the 36-byte header of a denoise/ok message. Throws sci::Error with
/// kind bad_magic / truncated / bridge_protocol.
DenoiseHeader decode_denoise_header(std::span<const std::uint8_t> bytes);
/// Parses a complete message. Error responses are returned as ErrorMessage.
struct Decoded {
  std::optional<DenoiseMessage> denoise;
  std::optional<ErrorMessage> error;
};
Decoded decode(std::span<const std::uint8_t> bytes);

/// Byte stream to a denoiser process. All reads honour a deadline.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void write_all(std::span<const std::uint8_t> bytes,
                         std::chrono::steady_clock::time_point deadline) = 0;
  virtual void read_exact(std::span<std::uint8_t> out,
                          std::chrono::steady_clock::time_point deadline) = 0;
  virtual std::string describe() const = 0;
};

/// Parses "stdio:<shell command>" or "tcp:<host>:<port>".
struct Endpoint {
  enum class Kind { stdio, tcp } kind = Kind::stdio;
  std::string command;
  std::string host;
  std::uint16_t port = 0;

  static Endpoint parse(const std::string& spec);
  std::string to_string() const;
};

std::unique_ptr<Transport> connect(const Endpoint& endpoint);

/// One serialized request/response connection. Not thread-safe; concurrent
/// solver runs each need their own client.
class Client {
 public:
  Client(const std::string& endpoint, int timeout_ms);

  /// Sends `x` and returns the denoised array with identical dims. Throws
  /// bridge_timeout, bridge_protocol ("protocol: dims mismatch", ...),
  /// bridge_non_finite, or denoiser_failure for error responses.
  Array4 denoise(const Array4& x, bool color, double sigma);

  /// Receives one full message (header + payload or error body).
  std::vector<std::uint8_t> round_trip(std::span<const std::uint8_t> request);

  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<Transport> transport_;
};

/// Sends a 2x2x1 request with sigma 0 and checks that the response is a
/// well-formed echo of the dims. Returns a human-readable summary.
std::string handshake(const std::string& endpoint, int timeout_ms);

}  // namespace sci::bridge

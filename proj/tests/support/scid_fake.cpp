// Scriptable SCID peer for the bridge tests. Reads requests on stdin and
// answers on stdout until EOF.
//
//   scid_fake echo|half|wrong-dims|nan|error|garbage|sleep|close

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "sci/bridge.hpp"

using namespace sci::bridge;

namespace {

bool read_exact(std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t r = ::read(0, p, n);
    if (r <= 0) return false;
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void write_all(const std::vector<std::uint8_t>& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t w = ::write(1, bytes.data() + off, bytes.size() - off);
    if (w <= 0) return;
    off += static_cast<std::size_t>(w);
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "echo";
  for (;;) {
    std::vector<std::uint8_t> msg(kDenoiseHeaderBytes);
    if (!read_exact(msg.data(), msg.size())) return 0;
    const DenoiseHeader h = decode_denoise_header(msg);
    msg.resize(kDenoiseHeaderBytes + 4 * h.payload_len);
    if (!read_exact(msg.data() + kDenoiseHeaderBytes, 4 * h.payload_len)) return 1;
    DenoiseMessage m = *decode(msg).denoise;
    m.header.type = MessageType::ok;

    if (mode == "half") {
      for (float& v : m.payload) v *= 0.5f;
    } else if (mode == "wrong-dims") {
      m.header.frames += 1;
      m.header.payload_len = std::size_t{m.header.nx} * m.header.ny * m.header.channels *
                             m.header.frames;
      m.payload.resize(m.header.payload_len, 0.0f);
    } else if (mode == "nan") {
      m.payload[0] = std::nanf("");
    } else if (mode == "error") {
      write_all(encode(ErrorMessage{ErrorCode::model_failure, "model exploded"}));
      continue;
    } else if (mode == "garbage") {
      write_all(std::vector<std::uint8_t>(kDenoiseHeaderBytes, 'x'));
      continue;
    } else if (mode == "sleep") {
      std::this_thread::sleep_for(std::chrono::seconds(5));
    } else if (mode == "close") {
      return 0;
    }
    write_all(encode(m));
  }
}

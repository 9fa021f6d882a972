#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include "sci/bridge.hpp"
#include "sci/denoisers.hpp"
#include "sci/solvers.hpp"
#include "support/helpers.hpp"

using namespace sci;
using namespace sci::bridge;

namespace {

std::string fake(const std::string& mode) { return std::string("stdio:") + SCID_FAKE_PATH + " " + mode; }

ErrorKind denoise_failure(const std::string& endpoint, int timeout_ms = 2000) {
  try {
    Client c(endpoint, timeout_ms);
    c.denoise(VideoCube(3, 2, 2, 0.5), false, 0.1);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::config;  // sentinel: no throw
}

// Single-connection echo server on an ephemeral loopback port.
class EchoServer {
 public:
  EchoServer() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::listen(listen_fd_, 1);
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }
  ~EchoServer() {
    thread_.join();
    ::close(listen_fd_);
  }

  std::uint16_t port() const { return port_; }

 private:
  static bool read_exact(int fd, std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      const ssize_t r = ::read(fd, p, n);
      if (r <= 0) return false;
      p += r;
      n -= static_cast<std::size_t>(r);
    }
    return true;
  }

  void serve() {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    for (;;) {
      std::vector<std::uint8_t> msg(kDenoiseHeaderBytes);
      if (!read_exact(fd, msg.data(), msg.size())) break;
      const DenoiseHeader h = decode_denoise_header(msg);
      msg.resize(kDenoiseHeaderBytes + 4 * h.payload_len);
      if (!read_exact(fd, msg.data() + kDenoiseHeaderBytes, 4 * h.payload_len)) break;
      msg[5] = static_cast<std::uint8_t>(MessageType::ok);
      if (::write(fd, msg.data(), msg.size()) < 0) break;
    }
    ::close(fd);
  }

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("golden request bytes") {
  const DenoiseMessage m = make_request(VideoCube(1, 1, 1, 0.25), false, 0.5);
  const std::vector<std::uint8_t> expect{
      'S', 'C', 'I', 'D', 1, 1, 0, 0,                  // prefix
      1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0,  // nx ny channels B
      0x00, 0x00, 0x00, 0x3f,                          // sigma 0.5
      1, 0, 0, 0, 0, 0, 0, 0,                          // payload length
      0x00, 0x00, 0x80, 0x3e};                         // 0.25
  CHECK(encode(m) == expect);
  CHECK(expect.size() == kDenoiseHeaderBytes + 4);
}

TEST_CASE("golden error bytes") {
  const std::vector<std::uint8_t> expect{'S', 'C', 'I', 'D', 1, 255, 0, 0, 5, 0, 0, 0, 2, 0, 0, 0, 'n', 'o'};
  CHECK(encode(ErrorMessage{ErrorCode::model_failure, "no"}) == expect);
  const Decoded d = decode(expect);
  REQUIRE(d.error);
  CHECK(d.error->code == ErrorCode::model_failure);
  CHECK(d.error->text == "no");
}

TEST_CASE("colour requests round-trip through encode and decode") {
  ColorVideoCube c(2, 2, 1);
  for (std::size_t k = 0; k < c.size(); ++k) c.values()[k] = static_cast<double>(k) / 16.0;
  const DenoiseMessage m = make_request(c, true, 0.125);
  const Decoded d = decode(encode(m));
  REQUIRE(d.denoise);
  CHECK(d.denoise->header.color);
  CHECK(d.denoise->header.channels == 3);
  CHECK(d.denoise->header.same_dims(m.header));
  CHECK(d.denoise->payload == m.payload);
}

TEST_CASE("malformed messages are classified") {
  auto bytes = encode(make_request(VideoCube(2, 1, 1, 0.5), false, 0.1));
  auto kind = [](const std::vector<std::uint8_t>& b) {
    try {
      decode(b);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::config;
  };
  auto bad = bytes;
  bad[1] = 'X';
  CHECK(kind(bad) == ErrorKind::bad_magic);
  CHECK(kind({bytes.begin(), bytes.begin() + 20}) == ErrorKind::truncated);
  CHECK(kind({bytes.begin(), bytes.end() - 1}) == ErrorKind::truncated);
  bad = bytes;
  bad[4] = 2;
  CHECK(kind(bad) == ErrorKind::bridge_protocol);
  bad = bytes;
  bad[8] = 3;  // nx no longer matches payload_len
  CHECK(kind(bad) == ErrorKind::bridge_protocol);
}

TEST_CASE("endpoint parsing") {
  CHECK(Endpoint::parse("stdio:python3 -m sidecar").command == "python3 -m sidecar");
  const Endpoint t = Endpoint::parse("tcp:localhost:7001");
  CHECK(t.host == "localhost");
  CHECK(t.port == 7001);
  CHECK(t.to_string() == "tcp:localhost:7001");
  CHECK_THROWS_AS(Endpoint::parse("tcp:localhost"), Error);
  CHECK_THROWS_AS(Endpoint::parse("tcp:localhost:99999"), Error);
  CHECK_THROWS_AS(Endpoint::parse("stdio:"), Error);
  CHECK_THROWS_AS(Endpoint::parse("http://x"), Error);
}

TEST_CASE("stdio client against scripted peers") {
  Client echo(fake("echo"), 2000);
  const VideoCube x(3, 2, 2, 0.375);
  CHECK(echo.denoise(x, false, 0.2) == static_cast<const Array4&>(x));
  CHECK(echo.denoise(x, false, 0.1) == static_cast<const Array4&>(x));  // connection is reused

  Client half(fake("half"), 2000);
  CHECK(half.denoise(x, false, 0.2).values()[0] == 0.1875);

  CHECK(denoise_failure(fake("wrong-dims")) == ErrorKind::bridge_protocol);
  CHECK(denoise_failure(fake("nan")) == ErrorKind::bridge_non_finite);
  CHECK(denoise_failure(fake("error")) == ErrorKind::denoiser_failure);
  CHECK(denoise_failure(fake("garbage")) == ErrorKind::bridge_protocol);
  CHECK(denoise_failure(fake("close")) == ErrorKind::bridge_io);
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(denoise_failure(fake("sleep"), 200) == ErrorKind::bridge_timeout);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(3));
}

TEST_CASE("error responses name the endpoint") {
  try {
    Client c(fake("error"), 2000);
    c.denoise(VideoCube(2, 2, 1, 0.5), false, 0.1);
    FAIL("expected a throw");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("model exploded") != std::string::npos);
    CHECK(what.find("scid_fake") != std::string::npos);
  }
}

TEST_CASE("handshake reports identity and non-identity peers") {
  CHECK(handshake(fake("echo"), 2000).find("identical to request") != std::string::npos);
  CHECK(handshake(fake("half"), 2000).find("differs from request") != std::string::npos);
  CHECK_THROWS_AS(handshake(fake("nan"), 2000), Error);
}

TEST_CASE("TCP transport") {
  EchoServer server;
  Client c("tcp:127.0.0.1:" + std::to_string(server.port()), 2000);
  const ColorVideoCube x(2, 4, 1, 0.25);
  CHECK(c.denoise(x, true, 0.3) == static_cast<const Array4&>(x));
}

TEST_CASE("refused TCP connections are I/O errors") {
  // Bind and close to find a port that is very likely free.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  CHECK(denoise_failure("tcp:127.0.0.1:" + std::to_string(ntohs(addr.sin_port))) == ErrorKind::bridge_io);
}

TEST_CASE("solvers run through the bridge") {
  test::QuietWarnings quiet;
  DenoiserBinding b;
  b.kind = DenoiserKind::external;
  b.endpoint = fake("half");
  b.timeout_ms = 2000;
  auto d = make_denoiser(b);
  CHECK(d->describe().find("external") == 0);
  const SensingOperator op(MaskCube(4, 4, 2, 0.5));
  const Measurement y(4, 4, 0.5);
  GapConfig c;
  c.max_iters = 3;
  const SolveResult r = gap_solve(y, op, *d, c);
  CHECK(r.report.iterations.size() == 3);

  b.endpoint = fake("error");
  auto failing = make_denoiser(b);
  try {
    gap_solve(y, op, *failing, c);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::denoiser_failure);
    CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
  }
}

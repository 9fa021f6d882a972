#include "sci/bridge.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

namespace sci::bridge {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'C', 'I', 'D'};

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

void put_prefix(std::vector<std::uint8_t>& out, MessageType type, bool color) {
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(type));
  out.push_back(color ? 1 : 0);
  out.push_back(0);
}

void check_prefix(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    fail(ErrorKind::bad_magic, "protocol: bad magic");
  if (bytes.size() < kPrefixBytes) fail(ErrorKind::truncated, "protocol: truncated");
  if (bytes[4] != kVersion)
    fail(ErrorKind::bridge_protocol, "protocol: unsupported version " + std::to_string(bytes[4]));
}

}  // namespace

std::vector<std::uint8_t> encode(const DenoiseMessage& m) {
  const DenoiseHeader& h = m.header;
  std::vector<std::uint8_t> out;
  out.reserve(kDenoiseHeaderBytes + 4 * m.payload.size());
  put_prefix(out, h.type, h.color);
  put_u32(out, h.nx);
  put_u32(out, h.ny);
  put_u32(out, h.channels);
  put_u32(out, h.frames);
  put_u32(out, std::bit_cast<std::uint32_t>(h.sigma));
  put_u64(out, m.payload.size());
  for (float v : m.payload) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

std::vector<std::uint8_t> encode(const ErrorMessage& m) {
  std::vector<std::uint8_t> out;
  put_prefix(out, MessageType::error, false);
  put_u32(out, static_cast<std::uint32_t>(m.code));
  put_u32(out, static_cast<std::uint32_t>(m.text.size()));
  out.insert(out.end(), m.text.begin(), m.text.end());
  return out;
}

DenoiseMessage make_request(const Array4& x, bool color, double sigma) {
  const Dims& d = x.dims();
  DenoiseMessage m;
  m.header.type = MessageType::denoise;
  m.header.color = color;
  m.header.nx = static_cast<std::uint32_t>(d.nx);
  m.header.ny = static_cast<std::uint32_t>(d.ny);
  m.header.channels = static_cast<std::uint32_t>(d.channels);
  m.header.frames = static_cast<std::uint32_t>(d.frames);
  m.header.sigma = static_cast<float>(sigma);
  m.header.payload_len = x.size();
  m.payload.reserve(x.size());
  for (double v : x.values()) m.payload.push_back(static_cast<float>(v));
  return m;
}

DenoiseHeader decode_denoise_header(std::span<const std::uint8_t> bytes) {
  check_prefix(bytes);
  const auto type = static_cast<MessageType>(bytes[5]);
  if (type != MessageType::denoise && type != MessageType::ok)
    fail(ErrorKind::bridge_protocol, "protocol: unexpected message type " + std::to_string(bytes[5]));
  if (bytes.size() < kDenoiseHeaderBytes) fail(ErrorKind::truncated, "protocol: truncated");
  const std::uint8_t* p = bytes.data();
  DenoiseHeader h;
  h.type = type;
  h.color = p[6] != 0;
  h.nx = get_u32(p + 8);
  h.ny = get_u32(p + 12);
  h.channels = get_u32(p + 16);
  h.frames = get_u32(p + 20);
  h.sigma = std::bit_cast<float>(get_u32(p + 24));
  h.payload_len = get_u64(p + 28);
  if (static_cast<std::uint64_t>(h.nx) * h.ny * h.channels * h.frames != h.payload_len)
    fail(ErrorKind::bridge_protocol, "protocol: payload length disagrees with dims");
  if (h.channels != 1 && h.channels != 3)
    fail(ErrorKind::bridge_protocol, "protocol: channels must be 1 or 3");
  return h;
}

Decoded decode(std::span<const std::uint8_t> bytes) {
  check_prefix(bytes);
  Decoded out;
  if (bytes[5] == static_cast<std::uint8_t>(MessageType::error)) {
    if (bytes.size() < kPrefixBytes + 8) fail(ErrorKind::truncated, "protocol: truncated");
    const std::uint32_t len = get_u32(bytes.data() + 12);
    if (bytes.size() < kPrefixBytes + 8 + len) fail(ErrorKind::truncated, "protocol: truncated");
    ErrorMessage e;
    e.code = static_cast<ErrorCode>(get_u32(bytes.data() + 8));
    e.text.assign(bytes.begin() + kPrefixBytes + 8, bytes.begin() + kPrefixBytes + 8 + len);
    out.error = std::move(e);
    return out;
  }
  DenoiseMessage m;
  m.header = decode_denoise_header(bytes);
  if ((bytes.size() - kDenoiseHeaderBytes) / 4 < m.header.payload_len)
    fail(ErrorKind::truncated, "protocol: truncated");
  m.payload.resize(m.header.payload_len);
  for (std::size_t k = 0; k < m.payload.size(); ++k)
    m.payload[k] = std::bit_cast<float>(get_u32(bytes.data() + kDenoiseHeaderBytes + 4 * k));
  out.denoise = std::move(m);
  return out;
}

// ---- endpoints --------------------------------------------------------------

Endpoint Endpoint::parse(const std::string& spec) {
  Endpoint e;
  if (spec.rfind("stdio:", 0) == 0) {
    e.kind = Kind::stdio;
    e.command = spec.substr(6);
    if (e.command.empty()) fail(ErrorKind::config, "endpoint '" + spec + "': empty command");
    return e;
  }
  if (spec.rfind("tcp:", 0) == 0) {
    e.kind = Kind::tcp;
    const std::string rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size())
      fail(ErrorKind::config, "endpoint '" + spec + "': expected tcp:<host>:<port>");
    e.host = rest.substr(0, colon);
    try {
      const unsigned long port = std::stoul(rest.substr(colon + 1));
      if (port == 0 || port > 65535) throw std::out_of_range("port");
      e.port = static_cast<std::uint16_t>(port);
    } catch (const std::logic_error&) {
      fail(ErrorKind::config, "endpoint '" + spec + "': bad port");
    }
    return e;
  }
  fail(ErrorKind::config, "endpoint '" + spec + "': expected stdio:<cmd> or tcp:<host>:<port>");
}

std::string Endpoint::to_string() const {
  return kind == Kind::stdio ? "stdio:" + command
                             : "tcp:" + host + ":" + std::to_string(port);
}

namespace {

int remaining_ms(std::chrono::steady_clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
      deadline - std::chrono::steady_clock::now());
  return static_cast<int>(std::max<long long>(0, left.count()));
}

void wait_ready(int fd, short events, std::chrono::steady_clock::time_point deadline,
                const std::string& who) {
  for (;;) {
    pollfd pfd{fd, events, 0};
    const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc > 0) return;
    if (rc == 0) fail(ErrorKind::bridge_timeout, who + ": timed out");
    if (errno != EINTR) fail(ErrorKind::bridge_io, who + ": poll failed: " + std::strerror(errno));
  }
}

void write_fd(int fd, std::span<const std::uint8_t> bytes,
              std::chrono::steady_clock::time_point deadline, const std::string& who) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    wait_ready(fd, POLLOUT, deadline, who);
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(ErrorKind::bridge_io, who + ": write failed: " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

void read_fd(int fd, std::span<std::uint8_t> out,
             std::chrono::steady_clock::time_point deadline, const std::string& who) {
  std::size_t done = 0;
  while (done < out.size()) {
    wait_ready(fd, POLLIN, deadline, who);
    const ssize_t n = ::read(fd, out.data() + done, out.size() - done);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(ErrorKind::bridge_io, who + ": read failed: " + std::strerror(errno));
    }
    if (n == 0) fail(ErrorKind::bridge_io, who + ": peer closed the connection");
    done += static_cast<std::size_t>(n);
  }
}

class StdioTransport final : public Transport {
 public:
  explicit StdioTransport(const std::string& command) : command_(command) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
      fail(ErrorKind::bridge_io, describe() + ": pipe failed");
    pid_ = ::fork();
    if (pid_ < 0) fail(ErrorKind::bridge_io, describe() + ": fork failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  ~StdioTransport() override {
    ::close(write_fd_);
    ::close(read_fd_);
    // Closing stdin asks the child to exit; give it a moment, then insist.
    for (int k = 0; k < 50; ++k) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  void write_all(std::span<const std::uint8_t> bytes,
                 std::chrono::steady_clock::time_point deadline) override {
    write_fd(write_fd_, bytes, deadline, describe());
  }
  void read_exact(std::span<std::uint8_t> out,
                  std::chrono::steady_clock::time_point deadline) override {
    read_fd(read_fd_, out, deadline, describe());
  }
  std::string describe() const override { return "stdio:" + command_; }

 private:
  std::string command_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
};

class TcpTransport final : public Transport {
 public:
  TcpTransport(const std::string& host, std::uint16_t port)
      : name_("tcp:" + host + ":" + std::to_string(port)) {
    ::signal(SIGPIPE, SIG_IGN);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
      fail(ErrorKind::bridge_io, name_ + ": " + ::gai_strerror(rc));
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd_ < 0) continue;
      if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd_);
      fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) fail(ErrorKind::bridge_io, name_ + ": connection refused");
  }
  ~TcpTransport() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void write_all(std::span<const std::uint8_t> bytes,
                 std::chrono::steady_clock::time_point deadline) override {
    write_fd(fd_, bytes, deadline, name_);
  }
  void read_exact(std::span<std::uint8_t> out,
                  std::chrono::steady_clock::time_point deadline) override {
    read_fd(fd_, out, deadline, name_);
  }
  std::string describe() const override { return name_; }

 private:
  std::string name_;
  int fd_ = -1;
};

}  // namespace

std::unique_ptr<Transport> connect(const Endpoint& endpoint) {
  if (endpoint.kind == Endpoint::Kind::stdio)
    return std::make_unique<StdioTransport>(endpoint.command);
  return std::make_unique<TcpTransport>(endpoint.host, endpoint.port);
}

// ---- client ---------------------------------------------------------------

Client::Client(const std::string& endpoint, int timeout_ms)
    : endpoint_(endpoint), timeout_(timeout_ms) {
  if (timeout_ms <= 0) fail(ErrorKind::config, "bridge timeout must be positive");
  transport_ = connect(Endpoint::parse(endpoint));
}

std::vector<std::uint8_t> Client::round_trip(std::span<const std::uint8_t> request) {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  transport_->write_all(request, deadline);

  std::vector<std::uint8_t> msg(kPrefixBytes);
  transport_->read_exact(msg, deadline);
  check_prefix(msg);
  if (msg[5] == static_cast<std::uint8_t>(MessageType::error)) {
    msg.resize(kPrefixBytes + 8);
    transport_->read_exact(std::span(msg).subspan(kPrefixBytes), deadline);
    const std::uint32_t len = get_u32(msg.data() + 12);
    msg.resize(kPrefixBytes + 8 + len);
    transport_->read_exact(std::span(msg).subspan(kPrefixBytes + 8), deadline);
    return msg;
  }
  msg.resize(kDenoiseHeaderBytes);
  transport_->read_exact(std::span(msg).subspan(kPrefixBytes), deadline);
  const DenoiseHeader h = decode_denoise_header(msg);
  msg.resize(kDenoiseHeaderBytes + 4 * h.payload_len);
  transport_->read_exact(std::span(msg).subspan(kDenoiseHeaderBytes), deadline);
  return msg;
}

namespace {

// A malformed reply is the peer's fault, not a local decoding problem.
ErrorKind reply_kind(ErrorKind k) {
  return k == ErrorKind::bad_magic || k == ErrorKind::truncated ? ErrorKind::bridge_protocol : k;
}

}  // namespace

Array4 Client::denoise(const Array4& x, bool color, double sigma) {
  const DenoiseMessage request = make_request(x, color, sigma);
  std::vector<std::uint8_t> reply;
  try {
    reply = round_trip(encode(request));
  } catch (const Error& e) {
    throw Error(reply_kind(e.kind()), std::string(e.what()) + " [endpoint " + endpoint_ + "]");
  }
  Decoded d;
  try {
    d = decode(reply);
  } catch (const Error& e) {
    throw Error(reply_kind(e.kind()), std::string(e.what()) + " [endpoint " + endpoint_ + "]");
  }
  if (d.error)
    fail(ErrorKind::denoiser_failure,
         "endpoint " + endpoint_ + " returned error " +
             std::to_string(static_cast<std::uint32_t>(d.error->code)) + ": " + d.error->text);
  const DenoiseMessage& m = *d.denoise;
  if (m.header.type != MessageType::ok)
    fail(ErrorKind::bridge_protocol, "protocol: expected ok response [endpoint " + endpoint_ + "]");
  if (!m.header.same_dims(request.header))
    fail(ErrorKind::bridge_protocol, "protocol: dims mismatch [endpoint " + endpoint_ + "]");
  std::vector<double> values(m.payload.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(m.payload[k]))
      fail(ErrorKind::bridge_non_finite, "protocol: non-finite payload [endpoint " + endpoint_ + "]");
    values[k] = m.payload[k];
  }
  return Array4(x.dims(), std::move(values));
}

std::string handshake(const std::string& endpoint, int timeout_ms) {
  Client client(endpoint, timeout_ms);
  const Array4 probe(Dims{2, 2, 1, 1}, std::vector<double>{0.125, 0.25, 0.5, 0.75});
  const Array4 out = client.denoise(probe, false, 0.0);
  const bool echo = std::equal(out.values().begin(), out.values().end(), probe.values().begin());
  return "endpoint " + endpoint + ": dims echoed (2,2,1,1); payload " +
         (echo ? "identical to request" : "differs from request (non-identity model)");
}

}  // namespace sci::bridge

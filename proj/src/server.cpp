#include "qmod/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <charconv>
#include <cstring>

namespace qmod {
namespace {

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

[[noreturn]] void io_fail(const std::string& what) { throw Error(Code::IO_ERROR, {what + ": " + std::strerror(errno)}); }

}  // namespace

std::string busy_line() { return Response::error(0, Error(Code::BUSY, {})).to_line(); }

void serve_stream(Session& session, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    for (const std::string& l : session.execute_line(line)) out << l << '\n';
    out.flush();
  }
}

SocketAddress SocketAddress::parse(std::string_view text) {
  SocketAddress a;
  if (text.starts_with("unix:") || text.find('/') != std::string_view::npos) {
    a.unix_domain = true;
    a.path = text.starts_with("unix:") ? text.substr(5) : text;
    if (a.path.empty() || a.path.size() >= sizeof(sockaddr_un::sun_path))
      throw Error(Code::IO_ERROR, {"bad socket path " + std::string(text)});
    return a;
  }
  const std::size_t colon = text.rfind(':');
  std::string_view port = colon == std::string_view::npos ? text : text.substr(colon + 1);
  if (colon != std::string_view::npos && colon > 0) a.host = text.substr(0, colon);
  int value = 0;
  auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || p != port.data() + port.size() || value < 0 || value > 65535)
    throw Error(Code::IO_ERROR, {"bad socket address " + std::string(text)});
  a.port = value;
  return a;
}

SocketServer::SocketServer(SocketAddress address, Store store, SessionOptions options)
    : address_(std::move(address)), options_(options), store_(std::move(store)) {}

SocketServer::~SocketServer() {
  stop_ = true;
  if (worker_.joinable()) worker_.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  if (address_.unix_domain && listen_fd_ >= 0) ::unlink(address_.path.c_str());
}

Store SocketServer::snapshot() const {
  std::lock_guard lock(store_mutex_);
  return store_;
}

void SocketServer::open() {
  if (address_.unix_domain) {
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (listen_fd_ < 0) io_fail("socket");
    sockaddr_un sa{};
    sa.sun_family = AF_UNIX;
    std::memcpy(sa.sun_path, address_.path.c_str(), address_.path.size() + 1);
    ::unlink(address_.path.c_str());
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) io_fail("bind " + address_.path);
  } else {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) io_fail("socket");
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(static_cast<std::uint16_t>(address_.port));
    if (::inet_pton(AF_INET, address_.host.c_str(), &sa.sin_addr) != 1)
      throw Error(Code::IO_ERROR, {"bad host " + address_.host});
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) io_fail("bind");
    socklen_t len = sizeof sa;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    bound_port_ = ntohs(sa.sin_port);
  }
  if (::listen(listen_fd_, 8) != 0) io_fail("listen");
}

void SocketServer::run() {
  if (listen_fd_ < 0) open();
  while (!stop_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    if (busy_.exchange(true)) {
      send_all(fd, busy_line() + "\n");
      ::close(fd);
      continue;
    }
    if (worker_.joinable()) worker_.join();
    worker_ = std::thread([this, fd] {
      handle(fd);
      busy_ = false;
      ::close(fd);
    });
  }
  if (worker_.joinable()) worker_.join();
}

void SocketServer::handle(int fd) {
  Session session(snapshot(), options_);
  std::string buffer;
  char chunk[4096];
  bool alive = true;
  while (alive && !stop_) {
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while (alive && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string reply;
      for (const std::string& l : session.execute_line(line)) reply += l + '\n';
      alive = send_all(fd, reply);
    }
  }
  // An open transaction dies with its connection.
  std::lock_guard lock(store_mutex_);
  store_ = session.committed();
}

}  // namespace qmod

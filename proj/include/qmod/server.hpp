#pragma once

// Serving the line protocol over stdio or a local socket. A store outlives
// connections; only one connection holds a session at a time and any other
// one receives a BUSY error line and is closed.

#include <atomic>
#include <istream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>

#include "qmod/protocol.hpp"

namespace qmod {

/// Runs a session over a pair of streams until end of input.
void serve_stream(Session& session, std::istream& in, std::ostream& out);

/// `host:port` (TCP, port 0 picks a free one), `unix:<path>` or a path
/// containing '/' for a Unix domain socket.
struct SocketAddress {
  bool unix_domain = false;
  std::string host = "127.0.0.1";
  int port = 0;
  std::string path;
  static SocketAddress parse(std::string_view text);  // throws Error(IO_ERROR)
};

/// `0 ERR BUSY "another session is active"`
std::string busy_line();

class SocketServer {
 public:
  SocketServer(SocketAddress address, Store store = Store{}, SessionOptions options = {});
  ~SocketServer();
  SocketServer(const SocketServer&) = delete;
  SocketServer& operator=(const SocketServer&) = delete;

  /// Binds and listens; throws Error(IO_ERROR) on failure.
  void open();
  /// Accepts connections until stop() is called.
  void run();
  void stop() { stop_ = true; }

  int port() const { return bound_port_; }
  /// The committed store as of the last finished connection.
  Store snapshot() const;

 private:
  void handle(int fd);

  SocketAddress address_;
  SessionOptions options_;
  mutable std::mutex store_mutex_;
  Store store_;
  int listen_fd_ = -1;
  int bound_port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<bool> busy_{false};
  std::thread worker_;
};

}  // namespace qmod

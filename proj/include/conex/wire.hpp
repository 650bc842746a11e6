#pragma once

// Newline-delimited JSON provider protocol:
//   {"op":"describe"}                  -> {"p":..,"classes":[..],"nonneg":true,"mask_token":".."}
//   {"op":"embed","texts":[..]}        -> {"activations":[[..],..]}
//   {"op":"classify","activations":..} -> {"logits":[[..],..]}
//   {"op":"shutdown"}                  -> {"ok":true}
// Failures answer {"error":"..","code":".."}; a malformed request line ends
// the session after the error reply.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "conex/provider.hpp"

namespace conex {

// One bidirectional line-oriented connection.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void send_line(const std::string& line) = 0;
  // nullopt on end of stream.
  virtual std::optional<std::string> recv_line() = 0;
};

// Reads '\n'-terminated lines from a file descriptor.
class FdLineReader {
 public:
  explicit FdLineReader(int fd) : fd_(fd) {}
  std::optional<std::string> next();

 private:
  int fd_;
  std::string buffer_;
  bool eof_ = false;
};

void write_all(int fd, const std::string& data);

// Spawns `/bin/sh -c command` and talks to its stdin/stdout.
class ChildProcessChannel final : public LineChannel {
 public:
  explicit ChildProcessChannel(const std::string& command);
  ~ChildProcessChannel() override;
  void send_line(const std::string& line) override;
  std::optional<std::string> recv_line() override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::unique_ptr<FdLineReader> reader_;
};

class TcpChannel final : public LineChannel {
 public:
  // Retries the connection `retries` times, `retry_delay_ms` apart.
  TcpChannel(const std::string& host, int port, int retries = 3, int retry_delay_ms = 200);
  ~TcpChannel() override;
  void send_line(const std::string& line) override;
  std::optional<std::string> recv_line() override;

 private:
  int fd_ = -1;
  std::unique_ptr<FdLineReader> reader_;
};

// Channel over an already-open pair of descriptors (not owned).
class FdChannel final : public LineChannel {
 public:
  FdChannel(int in_fd, int out_fd) : out_fd_(out_fd), reader_(in_fd) {}
  void send_line(const std::string& line) override { write_all(out_fd_, line + "\n"); }
  std::optional<std::string> recv_line() override { return reader_.next(); }

 private:
  int out_fd_;
  FdLineReader reader_;
};

// Provider client over a channel. One request in flight at a time; concurrent
// callers are serialized.
class WireProvider final : public EmbeddingProvider {
 public:
  WireProvider(std::unique_ptr<LineChannel> channel, std::string id);
  ~WireProvider() override;

  ProviderDescriptor describe() override;
  DenseMatrix embed(const std::vector<std::string>& texts) override;
  DenseMatrix classify(const DenseMatrix& activations) override;
  std::string id() override { return id_; }

  // Sends {"op":"shutdown"}; idempotent.
  void shutdown();

 private:
  std::string request(const std::string& line);

  std::unique_ptr<LineChannel> channel_;
  std::string id_;
  std::mutex mutex_;
  std::optional<ProviderDescriptor> descriptor_;
  bool closed_ = false;
};

// Answers one protocol request. Sets `stop` on shutdown or malformed input.
std::string handle_request(EmbeddingProvider& provider, const std::string& line, bool& stop);

// Serves one session on a descriptor pair until shutdown, EOF, or a malformed line.
void serve_fd(EmbeddingProvider& provider, int in_fd, int out_fd);

// Listens on host:port and serves connections one thread each until a
// session sends shutdown. `on_listening` receives the bound port.
void serve_tcp(EmbeddingProvider& provider, const std::string& host, int port,
               const std::function<void(int)>& on_listening = {});

}  // namespace conex

#include "conex/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>
#include <vector>

#include <json.hpp>

#include "conex/errors.hpp"

namespace conex {
namespace {

using json = nlohmann::json;

json matrix_to_json(const DenseMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

DenseMatrix matrix_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw ProviderError(std::string("'") + field + "' must be an array of rows");
  std::vector<std::vector<double>> rows;
  rows.reserve(j.size());
  for (const auto& r : j) rows.push_back(r.get<std::vector<double>>());
  try {
    return DenseMatrix::from_rows(rows);
  } catch (const PreconditionError& e) {
    throw ProviderError(std::string("'") + field + "': " + e.what());
  }
}

std::string error_reply(const std::string& message, const std::string& code) {
  json j;
  j["error"] = message;
  j["code"] = code;
  return j.dump();
}

}  // namespace

std::optional<std::string> FdLineReader::next() {
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (eof_) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    char chunk[65536];
    const ssize_t n = ::read(fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      eof_ = true;
    } else if (n == 0) {
      eof_ = true;
    } else {
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }
}

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) {
      const ssize_t w = ::write(fd, data.data() + off, data.size() - off);
      if (w < 0) {
        if (errno == EINTR) continue;
        throw ProviderError(std::string("write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(w);
      continue;
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProviderError(std::string("write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

ChildProcessChannel::ChildProcessChannel(const std::string& command) {
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0)
    throw ProviderError(std::string("pipe failed: ") + std::strerror(errno));
  ::signal(SIGPIPE, SIG_IGN);
  const pid_t pid = ::fork();
  if (pid < 0) throw ProviderError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  reader_ = std::make_unique<FdLineReader>(from_child_);
}

ChildProcessChannel::~ChildProcessChannel() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

void ChildProcessChannel::send_line(const std::string& line) { write_all(to_child_, line + "\n"); }

std::optional<std::string> ChildProcessChannel::recv_line() { return reader_->next(); }

TcpChannel::TcpChannel(const std::string& host, int port, int retries, int retry_delay_ms) {
  ::signal(SIGPIPE, SIG_IGN);
  std::string last_error;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(retry_delay_ms));
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port_str = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res); rc != 0) {
      last_error = ::gai_strerror(rc);
      continue;
    }
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      last_error = std::strerror(errno);
      ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ >= 0) {
      reader_ = std::make_unique<FdLineReader>(fd_);
      return;
    }
  }
  throw ProviderError("provider unavailable at " + host + ":" + std::to_string(port) + " after " +
                          std::to_string(retries) + " retries: " + last_error,
                      retries);
}

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpChannel::send_line(const std::string& line) { write_all(fd_, line + "\n"); }

std::optional<std::string> TcpChannel::recv_line() { return reader_->next(); }

WireProvider::WireProvider(std::unique_ptr<LineChannel> channel, std::string id)
    : channel_(std::move(channel)), id_(std::move(id)) {}

// Dropping the channel is enough: a child sees EOF on stdin, a TCP session
// sees the socket close. An explicit shutdown() would stop a shared server.
WireProvider::~WireProvider() = default;

std::string WireProvider::request(const std::string& line) {
  if (closed_) throw ProviderError("provider session already shut down");
  channel_->send_line(line);
  auto reply = channel_->recv_line();
  if (!reply) {
    closed_ = true;
    throw ProviderError("provider closed the connection");
  }
  return *reply;
}

namespace {

json parse_reply(const std::string& reply) {
  json j;
  try {
    j = json::parse(reply);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed provider reply: ") + e.what());
  }
  if (j.is_object() && j.contains("error"))
    throw ProviderError("provider error [" + j.value("code", std::string("unknown")) +
                        "]: " + j["error"].get<std::string>());
  return j;
}

}  // namespace

ProviderDescriptor WireProvider::describe() {
  std::lock_guard lock(mutex_);
  if (descriptor_) return *descriptor_;
  const json j = parse_reply(request(R"({"op":"describe"})"));
  ProviderDescriptor d;
  try {
    d.p = j.at("p").get<std::size_t>();
    d.class_names = j.at("classes").get<std::vector<std::string>>();
    d.nonneg_certified = j.at("nonneg").get<bool>();
    d.mask_token = j.value("mask_token", std::string("[MASK]"));
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed describe reply: ") + e.what());
  }
  descriptor_ = d;
  return d;
}

DenseMatrix WireProvider::embed(const std::vector<std::string>& texts) {
  const std::size_t p = describe().p;
  json req;
  req["op"] = "embed";
  req["texts"] = texts;
  std::lock_guard lock(mutex_);
  const json j = parse_reply(request(req.dump()));
  if (!j.contains("activations")) throw ProviderError("embed reply missing 'activations'");
  DenseMatrix a = matrix_from_json(j["activations"], "activations");
  if (texts.empty()) return DenseMatrix(0, p);
  if (a.rows() != texts.size() || a.cols() != p)
    throw ProviderError("embed reply has shape " + shape_str(a) + ", expected " + std::to_string(texts.size()) +
                        "x" + std::to_string(p));
  return a;
}

DenseMatrix WireProvider::classify(const DenseMatrix& activations) {
  const auto d = describe();
  require(activations.cols() == d.p, "classify: activations have " + std::to_string(activations.cols()) +
                                         " columns, provider expects p = " + std::to_string(d.p));
  json req;
  req["op"] = "classify";
  req["activations"] = matrix_to_json(activations);
  std::lock_guard lock(mutex_);
  const json j = parse_reply(request(req.dump()));
  if (!j.contains("logits")) throw ProviderError("classify reply missing 'logits'");
  DenseMatrix z = matrix_from_json(j["logits"], "logits");
  if (activations.rows() == 0) return DenseMatrix(0, d.class_names.size());
  if (z.rows() != activations.rows()) throw ProviderError("classify reply row count mismatch");
  return z;
}

void WireProvider::shutdown() {
  std::lock_guard lock(mutex_);
  if (closed_) return;
  channel_->send_line(R"({"op":"shutdown"})");
  channel_->recv_line();
  closed_ = true;
}

std::string handle_request(EmbeddingProvider& provider, const std::string& line, bool& stop) {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::exception& e) {
    stop = true;
    return error_reply(std::string("malformed request: ") + e.what(), "malformed");
  }
  if (!req.is_object() || !req.contains("op") || !req["op"].is_string()) {
    stop = true;
    return error_reply("request must be an object with a string 'op'", "malformed");
  }
  const std::string op = req["op"].get<std::string>();
  try {
    if (op == "describe") {
      const auto d = provider.describe();
      nlohmann::ordered_json out;
      out["p"] = d.p;
      out["classes"] = d.class_names;
      out["nonneg"] = d.nonneg_certified;
      out["mask_token"] = d.mask_token;
      return out.dump();
    }
    if (op == "embed") {
      const auto texts = req.at("texts").get<std::vector<std::string>>();
      json out;
      out["activations"] = matrix_to_json(provider.embed(texts));
      return out.dump();
    }
    if (op == "classify") {
      const DenseMatrix a = matrix_from_json(req.at("activations"), "activations");
      const auto d = provider.describe();
      if (a.rows() > 0 && a.cols() != d.p)
        return error_reply("activations have " + std::to_string(a.cols()) + " columns, expected " +
                               std::to_string(d.p),
                           "dimension_mismatch");
      json out;
      out["logits"] = a.rows() == 0 ? json::array() : matrix_to_json(provider.classify(a));
      return out.dump();
    }
    if (op == "shutdown") {
      stop = true;
      return R"({"ok":true})";
    }
    return error_reply("unknown op '" + op + "'", "unknown_op");
  } catch (const json::exception& e) {
    stop = true;
    return error_reply(std::string("malformed request: ") + e.what(), "malformed");
  } catch (const std::exception& e) {
    return error_reply(e.what(), "internal");
  }
}

void serve_fd(EmbeddingProvider& provider, int in_fd, int out_fd) {
  FdLineReader reader(in_fd);
  bool stop = false;
  while (!stop) {
    auto line = reader.next();
    if (!line) break;
    if (line->empty()) continue;
    write_all(out_fd, handle_request(provider, *line, stop) + "\n");
  }
}

void serve_tcp(EmbeddingProvider& provider, const std::string& host, int port,
               const std::function<void(int)>& on_listening) {
  ::signal(SIGPIPE, SIG_IGN);
  const int listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd < 0) throw ProviderError(std::string("socket failed: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd);
    throw ConfigError("listen address must be an IPv4 literal or localhost: " + host);
  }
  if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd);
    throw ProviderError("cannot listen on " + host + ":" + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  std::atomic<bool> stopping{false};
  std::vector<std::thread> sessions;
  while (!stopping) {
    const int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    sessions.emplace_back([&, fd] {
      FdLineReader reader(fd);
      bool stop = false;
      try {
        while (!stop) {
          auto line = reader.next();
          if (!line) break;
          if (line->empty()) continue;
          const std::string reply = handle_request(provider, *line, stop);
          write_all(fd, reply + "\n");
          if (stop && reply == R"({"ok":true})") {
            stopping = true;
            ::shutdown(listen_fd, SHUT_RDWR);
          }
        }
      } catch (const std::exception&) {
      }
      ::close(fd);
    });
  }
  for (auto& t : sessions) t.join();
  ::close(listen_fd);
}

}  // namespace conex

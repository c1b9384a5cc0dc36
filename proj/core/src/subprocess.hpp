#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <sys/types.h>

namespace enrolcast::detail {

/// A shell command whose stdin and stdout are one end of a socket pair.
/// Lines are exchanged with deadlines; the child is killed on destruction.
class ChildProcess {
 public:
  ChildProcess(const std::string& command, const std::map<std::string, std::string>& env);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  /// False if the peer has gone away.
  bool write_line(const std::string& line);
  /// Next newline-terminated line, or nullopt on deadline or EOF.
  std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline);
  bool eof() const noexcept { return eof_; }
  void kill();

 private:
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
};

}  // namespace enrolcast::detail

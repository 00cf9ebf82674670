#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tssr {

enum class ErrorKind {
  InvalidArgument,
  Shape,
  Data,
  Degenerate,
  Audit,
  Numerical,
  Precondition,
  Config,
  Io,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace tssr

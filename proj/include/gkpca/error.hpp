#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gkpca {

enum class ErrorKind {
  Input,       // precondition violated by caller-supplied data
  Format,      // malformed file contents
  Numeric,     // eigensolver / filter failure
  Index,       // out-of-range index
  Degenerate,  // no meaningful neighbourhood for a pre-image
  Io,          // file could not be opened or written
  Usage        // command-line misuse
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Format: return "format";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Index: return "index";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Io: return "io";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace gkpca

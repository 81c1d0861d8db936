#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace collate {

enum class ErrorKind {
  InvalidArgument,
  Io,
  BadMagic,
  VersionMismatch,
  Truncated,
  NonFinite,
  ShapeMismatch,
  ChannelMismatch,
  DimensionMismatch,
  StageOrder,
  OutOfRange,
  Empty,
  Parse,
  Conflict,
  Internal,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure inside the library is reported through this type; the C API
// maps `kind()` onto its status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace collate

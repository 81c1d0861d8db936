#include "collate/error.hpp"

namespace collate {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Io: return "io";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::VersionMismatch: return "version-mismatch";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::ChannelMismatch: return "channel-mismatch";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::StageOrder: return "stage-order";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::Empty: return "empty";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace collate

#include "wavenet/error.hpp"

namespace wavenet {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid parameter";
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::State: return "state error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::NoFit: return "no fit";
    case ErrorKind::Divergence: return "numeric divergence";
  }
  return "error";
}

}  // namespace wavenet

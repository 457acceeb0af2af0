#include "agser/error.hpp"

namespace agser {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Structural: return "structural";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::Capability: return "capability";
  }
  return "unknown";
}

}  // namespace agser

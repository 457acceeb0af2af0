#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agser {

enum class ErrorKind {
  Structural,       // shape / index violations
  DegenerateInput,  // input too small to split
  Configuration,    // bad flags, templates, script files
  Transport,        // remote backend unreachable or malformed reply
  Capacity,         // prompt exceeds backend context
  Parse,            // dataset / interchange decoding
  Validation,       // semantically invalid data
  UndefinedMetric,  // e.g. AUC with a single class
  Capability,       // backend lacks a required feature
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, bool retriable = false)
      : std::runtime_error(message), kind_(kind), retriable_(retriable) {}

  ErrorKind kind() const noexcept { return kind_; }
  bool retriable() const noexcept { return retriable_; }

 private:
  ErrorKind kind_;
  bool retriable_;
};

}  // namespace agser

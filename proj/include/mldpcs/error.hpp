#pragma once

#include <stdexcept>
#include <string>

namespace mldpcs {

enum class Errc {
  invalid_dimension,
  invalid_config,
  dimension_mismatch,
  degenerate_key,
  invalid_message,
  infeasible_tolerance,
  authorization,
  no_message,
  degenerate_labels,
  io,
  parse,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_dimension: return "invalid-dimension";
    case Errc::invalid_config: return "invalid-config";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::degenerate_key: return "degenerate-key";
    case Errc::invalid_message: return "invalid-message";
    case Errc::infeasible_tolerance: return "infeasible-tolerance";
    case Errc::authorization: return "authorization";
    case Errc::no_message: return "no-message";
    case Errc::degenerate_labels: return "degenerate-labels";
    case Errc::io: return "io";
    case Errc::parse: return "parse";
  }
  return "unknown";
}

/// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace mldpcs

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rrdof {

enum class Errc {
  shape,
  domain,
  numerical_failure,
  degenerate_design,
  degeneracy,
  contract_violation,
  saturation,
  undefined_score,
  no_model,
  config,
  undefined_snr,
  parse,
  io,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::shape: return "shape";
    case Errc::domain: return "domain";
    case Errc::numerical_failure: return "numerical_failure";
    case Errc::degenerate_design: return "degenerate_design";
    case Errc::degeneracy: return "degeneracy";
    case Errc::contract_violation: return "contract_violation";
    case Errc::saturation: return "saturation";
    case Errc::undefined_score: return "undefined_score";
    case Errc::no_model: return "no_model";
    case Errc::config: return "config";
    case Errc::undefined_snr: return "undefined_snr";
    case Errc::parse: return "parse";
    case Errc::io: return "io";
  }
  return "unknown";
}

/// All library failures are reported through this type; `code()` identifies
/// the failure class so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace rrdof

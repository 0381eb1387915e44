#ifndef CHANADAPT_ERROR_HPP
#define CHANADAPT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace chanadapt {

enum class errc {
  parse,
  domain,
  shape,
  numeric,
  convergence,
  label_mismatch,
  format,
  io,
  config,
  undefined_test,
  unknown_name,
};

inline const char* to_string(errc code) noexcept {
  switch (code) {
    case errc::parse: return "parse";
    case errc::domain: return "domain";
    case errc::shape: return "shape";
    case errc::numeric: return "numeric";
    case errc::convergence: return "convergence";
    case errc::label_mismatch: return "label-mismatch";
    case errc::format: return "format";
    case errc::io: return "io";
    case errc::config: return "config";
    case errc::undefined_test: return "undefined-test";
    case errc::unknown_name: return "unknown-name";
  }
  return "unknown";
}

/// Every failure raised by the library. The category is stable and is what
/// the CLI prints as the machine-parsable prefix of its error line.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

}  // namespace chanadapt

#endif  // CHANADAPT_ERROR_HPP

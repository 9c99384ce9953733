#pragma once

#include <stdexcept>
#include <string>

namespace sct {

enum class ErrorCode {
  invalid_argument = 1,
  unset_parameter,
  parse,
  schema,
  io,
  infeasible_input,
};

/// Every failure raised by the library carries one of the codes above so the
/// C boundary can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sct

#pragma once

#include <stdexcept>
#include <string>

namespace guided {

// Every failure the library reports maps onto one of these kinds; the CLI
// turns the kind into a process exit code.
enum class ErrorKind {
  input,            // malformed arguments or out-of-range indices
  schema,           // model/policy file does not validate
  degenerate,       // contamination level of 1 makes a model meaningless
  infeasible_band,  // no likelihood-ratio band normalizes both PMFs
  infeasible_budget,
  graph_invalid,    // cycle, unreachable node, bad edge
  mismatch,         // policy does not belong to the system it is used with
  numerical,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace guided

#pragma once

#include <stdexcept>
#include <string>

namespace dirac {

enum class ErrorKind {
  config,       // bad parameters or configuration
  data_format,  // malformed or inconsistent input files
  protocol,     // zero-shot protocol violation (seen set touches U_com)
  numerical,    // solver or training failure
};

/// Process exit code associated with an error kind.
int exit_code(ErrorKind kind) noexcept;

/// Base exception for the toolkit. The message is prefixed with the module
/// that raised it, e.g. "catalog: ragged row 4".
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& module, const std::string& message)
      : std::runtime_error(module + ": " + message), kind_(kind), module_(module) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

private:
  ErrorKind kind_;
  std::string module_;
};

}  // namespace dirac

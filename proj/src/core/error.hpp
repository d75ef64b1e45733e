#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace unibeta {

// Base for every error the core raises. The C API maps each subclass onto a
// stable status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (CSV rows, incomplete layouts, ...).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::vector<std::string> details = {})
      : Error(what), details_(std::move(details)) {}
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  std::vector<std::string> details_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace unibeta

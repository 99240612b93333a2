// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_ERRORS_HPP
#define PROSODET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace prosodet {

// Error taxonomy mirrors the CLI exit codes: config (2), data (3),
// numerical (4). Anything else escapes as a generic failure (1).
enum class ErrorKind { Generic = 1, Config = 2, Data = 3, Numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

}  // namespace prosodet

#endif  // PROSODET_ERRORS_HPP

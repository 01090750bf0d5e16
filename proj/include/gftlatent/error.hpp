// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_ERROR_HPP
#define GFTLATENT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gftl {

/// Failure category. The numeric values are the CLI exit codes.
enum class ErrorKind : int {
  kParse = 2,
  kConfig = 3,
  kNumeric = 4,
  kIo = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

inline Error parse_error(const std::string& what) { return {ErrorKind::kParse, what}; }
inline Error config_error(const std::string& what) { return {ErrorKind::kConfig, what}; }
inline Error numeric_error(const std::string& what) { return {ErrorKind::kNumeric, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::kIo, what}; }

}  // namespace gftl

#endif  // GFTLATENT_ERROR_HPP

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input file; message carries file:line.
class InputError : public Error {
 public:
  InputError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what) {}
  explicit InputError(const std::string& what) : Error(what) {}
};

}  // namespace nflow

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adae {

// Base of every error raised by the library. Input errors map to CLI exit
// code 2, environment errors (filesystem, permissions) to exit code 3.
class Error : public std::runtime_error {
 public:
  enum class Kind { input, environment };

  explicit Error(const std::string& what, Kind kind = Kind::input)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Malformed text input. `line` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A value violated a documented invariant. `path` names the offending field
// (e.g. "workflows[2].model_id") when one exists.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::string path = {})
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// No placement or scenario satisfies the resource constraints.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class EnvironmentError : public Error {
 public:
  explicit EnvironmentError(const std::string& what)
      : Error(what, Kind::environment) {}
};

}  // namespace adae

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hogwild {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidModelError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Raised when an exhaustive computation would exceed the enumeration limit.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// A parameter lies outside the region where a formula is defined
// (for example a Dobrushin coefficient >= 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Text-format error carrying the 1-based line number it was detected on.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail), line_(line), detail_(detail) {}

  ParseError(const std::string& source, std::size_t line, const std::string& detail)
      : Error(source + ":" + std::to_string(line) + ": " + detail), line_(line), detail_(detail) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

// Experiment configuration error; `path` names the offending field
// as "section.key".
class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace hogwild

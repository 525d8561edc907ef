#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace archgen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: malformed digest, out-of-range value, invalid flag.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A record whose nn_id does not match its code. Always a caller bug.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// No trained records exist for the requested dataset.
class EmptyPoolError : public Error {
 public:
  using Error::Error;
};

class MissingDataError : public Error {
 public:
  using Error::Error;
};

/// Too few samples or zero variance for a statistical test.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Retries exhausted or transport down.
class GenerationUnavailable : public Error {
 public:
  using Error::Error;
};

/// Non-retryable client-side failure (HTTP 4xx, bad endpoint, bad key).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class ExtractionError : public Error {
 public:
  using Error::Error;
};

/// Input file could not be parsed. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace archgen

namespace archgen {

/// The training worker could not be reached.
class TrainerUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace archgen

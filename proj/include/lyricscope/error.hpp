#pragma once

#include <stdexcept>
#include <string>

namespace lyricscope {

// Bad input files, missing columns, invalid flags or config fields.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke a precondition on input shape (e.g. unsorted events).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// I/O or decoding failure inside a fetcher. Distinct from "not found";
// callers may retry.
class FetchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedStreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-instrumental lyrics record with no tokens.
class MissingLyricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateVarianceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedCorrelationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lyricscope

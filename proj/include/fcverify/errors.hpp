#pragma once

#include <stdexcept>
#include <string>

namespace fcv {

// Base of every error raised by the library. The CLI maps the two families
// below onto exit codes: caller mistakes exit 1, problems with data exit 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller-side mistakes: out-of-range arguments, invalid rule or threshold
// specifications, values outside their declared domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Unsupported or inconsistent configuration (unknown mixing measure, bad flag
// combination).
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Problems with the data itself.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyDataError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// A statistic that is not defined for the given data (e.g. AUC with no events).
class UndefinedStatisticError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace fcv

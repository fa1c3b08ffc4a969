#pragma once

#include <stdexcept>
#include <string>

namespace ape {

// Every failure raised by the library derives from Error. The CLI maps the
// three families below onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: invalid rates, unknown keys, malformed plans. Exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad data: anything wrong with a corpus, a token sequence, a label or a file.
// Exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public DataError {
 public:
  using DataError::DataError;
};

class MissingSegment : public DataError {
 public:
  using DataError::DataError;
};

class VocabError : public DataError {
 public:
  using DataError::DataError;
};

class LabelError : public DataError {
 public:
  using DataError::DataError;
};

class CountError : public DataError {
 public:
  using DataError::DataError;
};

class LossError : public DataError {
 public:
  using DataError::DataError;
};

class MetricError : public DataError {
 public:
  using DataError::DataError;
};

// Training diverged (non-finite loss). Exit code 4.
class TrainError : public Error {
 public:
  using Error::Error;
};

}  // namespace ape

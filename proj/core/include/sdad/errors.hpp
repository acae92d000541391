#pragma once

#include <stdexcept>
#include <string>

namespace sdad {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A SoC vector that cannot be interpreted as a profile (too short, out of range, non-finite).
class InvalidProfileError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (e.g. depth outside [0,1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Inconsistent structural inputs (mismatched dimensions, malformed cycle data).
class StructuralError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

// File ingestion failure; carries the 1-based row number when one is known.
class IngestError : public Error {
 public:
  explicit IngestError(const std::string& msg, long row = -1)
      : Error(row >= 0 ? msg + " (row " + std::to_string(row) + ")" : msg), row_(row) {}
  long row() const { return row_; }

 private:
  long row_;
};

}  // namespace sdad

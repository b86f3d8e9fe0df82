#pragma once

#include <charconv>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rtme {

namespace detail {

// Shortest decimal that round-trips, for messages and CSV output.
inline std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

}  // namespace detail

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy shallow.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter outside its admissible set (gamma >= 1, alpha <= 1 - n/p, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

// Fixed-point iteration hit max_iter. Carries the last iterate so callers can
// inspect how far it got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::MatrixXd last_iterate,
                   int iterations, double last_step)
      : Error(what),
        last_iterate_(std::move(last_iterate)),
        iterations_(iterations),
        last_step_(last_step) {}

  const Eigen::MatrixXd& last_iterate() const { return last_iterate_; }
  int iterations() const { return iterations_; }
  double last_step() const { return last_step_; }

 private:
  Eigen::MatrixXd last_iterate_;
  int iterations_;
  double last_step_;
};

// A leave-one-out refit inside exact CVL failed; names the held-out index.
class LeaveOneOutError : public Error {
 public:
  LeaveOneOutError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// A selector failed while evaluating one grid point; names the alpha.
class SelectionError : public Error {
 public:
  SelectionError(const std::string& what, double alpha) : Error(what), alpha_(alpha) {}
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// CSV content error. Row and column are 1-based, as a text editor shows them.
class ParseError : public IoError {
 public:
  enum class Kind { empty_file, ragged_row, non_numeric };

  ParseError(Kind kind, const std::string& what, std::size_t row, std::size_t column)
      : IoError(what), kind_(kind), row_(row), column_(column) {}
  Kind kind() const { return kind_; }
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  Kind kind_;
  std::size_t row_;
  std::size_t column_;
};

}  // namespace rtme

// Exception types shared across the toolkit.

#ifndef PMIEMB_ERROR_H_
#define PMIEMB_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmiemb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  IoError(const std::string &path, const std::string &what)
      : Error(what + ": " + path), path_(path) {}
  const std::string &path() const { return path_; }

 private:
  std::string path_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class EmptyVocabularyError : public Error {
 public:
  using Error::Error;
};

// Internal invariant of an input object was violated (e.g. a zero marginal).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string &what, double residual_bound)
      : Error(what + " (residual bound " + std::to_string(residual_bound) + ")"),
        residual_bound_(residual_bound) {}
  double residual_bound() const { return residual_bound_; }

 private:
  double residual_bound_;
};

class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(std::size_t achieved_rank, std::size_t requested_rank)
      : Error("numerically zero pivot at step " + std::to_string(achieved_rank) +
              " of " + std::to_string(requested_rank)),
        achieved_rank_(achieved_rank) {}
  std::size_t achieved_rank() const { return achieved_rank_; }

 private:
  std::size_t achieved_rank_;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string &what, std::size_t row, std::size_t col)
      : Error(what + " at (" + std::to_string(row) + ", " + std::to_string(col) + ")"),
        row_(row), col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_, col_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class OovError : public Error {
 public:
  explicit OovError(const std::string &word)
      : Error("out-of-vocabulary word: " + word), word_(word) {}
  const std::string &word() const { return word_; }

 private:
  std::string word_;
};

class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// Unbalanced or degenerate experimental design.
class DesignError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmiemb

#endif  // PMIEMB_ERROR_H_

#ifndef OCCA_ERRORS_HPP_
#define OCCA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace occa {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on shapes, symmetry or definiteness was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// An iterative kernel failed to converge.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, int iterations)
      : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

/// tr(G^T D) vanished, so xi(G) = tr(G^T A G) / tr(G^T D) is undefined.
/// Realign G against D or perturb it.
class UndefinedRatio : public Error {
 public:
  using Error::Error;
};

/// A view has zero variance (globally or in the projected subspace).
class DegenerateView : public Error {
 public:
  DegenerateView(const std::string& what, int view = -1) : Error(what), view_(view) {}
  int view() const noexcept { return view_; }

 private:
  int view_;
};

/// The requested number of directions exceeds a numerical rank.
class RankDeficiency : public Error {
 public:
  RankDeficiency(const std::string& what, int view = -1) : Error(what), view_(view) {}
  int view() const noexcept { return view_; }

 private:
  int view_;
};

/// Under a sparse weighting a view has no selected partner, so its D_s is zero.
class IsolatedView : public Error {
 public:
  IsolatedView(const std::string& what, int view) : Error(what), view_(view) {}
  int view() const noexcept { return view_; }

 private:
  int view_;
};

/// Malformed input file. Line and column are 1-based; column 0 means "whole line".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " at line " + std::to_string(line) +
              (column > 0 ? ", column " + std::to_string(column) : std::string())),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace occa

#endif  // OCCA_ERRORS_HPP_

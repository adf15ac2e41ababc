#ifndef GCOVTEST_ERRORS_HPP
#define GCOVTEST_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcovtest {

/** Base class of every exception thrown by the library. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class DomainViolation : public Error {
 public:
  DomainViolation(std::size_t row, const std::string& transform)
      : Error("transform '" + transform + "' undefined at row " +
              std::to_string(row)),
        row_(row),
        transform_(transform) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& transform() const noexcept { return transform_; }

 private:
  std::size_t row_;
  std::string transform_;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class DegenerateColumn : public Error {
 public:
  explicit DegenerateColumn(std::size_t column)
      : Error("column " + std::to_string(column) + " has zero variance"),
        column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class DegenerateSeries : public Error {
 public:
  using Error::Error;
};

class SingularGamma0 : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class InsufficientSample : public Error {
 public:
  using Error::Error;
};

class InvalidTheta : public Error {
 public:
  using Error::Error;
};

class BurnTooSmall : public Error {
 public:
  using Error::Error;
};

class DfNonPositive : public Error {
 public:
  using Error::Error;
};

class RefitFailure : public Error {
 public:
  using Error::Error;
};

class AllRejected : public Error {
 public:
  using Error::Error;
};

class SingularWeighting : public Error {
 public:
  using Error::Error;
};

class RankDeficientJacobian : public Error {
 public:
  using Error::Error;
};

class AllStartsFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace gcovtest

#endif  // GCOVTEST_ERRORS_HPP

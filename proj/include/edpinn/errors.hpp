#pragma once

#include <stdexcept>
#include <string>

namespace edpinn {

/// Base class for every structured error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedPrimitiveError : public Error {
 public:
  explicit UnsupportedPrimitiveError(std::string primitive)
      : Error("unsupported primitive in differentiable expression: " + primitive),
        primitive_(std::move(primitive)) {}
  const std::string& primitive() const noexcept { return primitive_; }

 private:
  std::string primitive_;
};

/// A non-finite value appeared inside a differentiated computation.
class OverflowError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or blew past the divergence guard.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double t, double x)
      : Error(what), t_(t), x_(x) {}
  explicit DivergenceError(const std::string& what) : Error(what) {}
  double offending_t() const noexcept { return t_; }
  double offending_x() const noexcept { return x_; }

 private:
  double t_ = 0.0;
  double x_ = 0.0;
};

class OracleError : public Error {
 public:
  using Error::Error;
};

class IncompatibleCheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace edpinn

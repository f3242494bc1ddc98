#pragma once

#include <stdexcept>
#include <string>

namespace kzn {

/// An iterative method exhausted its budget or a linear solve broke down.
class NumericalFailure : public std::runtime_error {
public:
  explicit NumericalFailure(const std::string& what, double last_value = 0.0)
      : std::runtime_error(what), last_value_(last_value) {}

  /// Last iterate produced before giving up, when one exists.
  double last_value() const noexcept { return last_value_; }

private:
  double last_value_;
};

/// The quasilinear factor 1 - 2ku dropped to or below the guard margin.
class DegeneracyError : public std::runtime_error {
public:
  DegeneracyError(const std::string& what, double t, int node, double factor)
      : std::runtime_error(what), t_(t), node_(node), factor_(factor) {}

  double time() const noexcept { return t_; }
  int node() const noexcept { return node_; }
  double factor() const noexcept { return factor_; }

private:
  double t_;
  int node_;
  double factor_;
};

/// A truncated improper time integral carries too large a tail.
class TruncationError : public std::runtime_error {
public:
  TruncationError(const std::string& what, double tail_bound)
      : std::runtime_error(what), tail_bound_(tail_bound) {}

  double tail_bound() const noexcept { return tail_bound_; }

private:
  double tail_bound_;
};

/// A quantity that should settle to a limit shows no decay.
class NoLimitError : public std::runtime_error {
public:
  explicit NoLimitError(const std::string& what, double fitted_rate = 0.0)
      : std::runtime_error(what), fitted_rate_(fitted_rate) {}

  double fitted_rate() const noexcept { return fitted_rate_; }

private:
  double fitted_rate_;
};

/// Integrability exponent outside the supported range (p must exceed 1 and
/// the borderline value 3/2 is excluded).
class UnsupportedExponent : public std::invalid_argument {
public:
  explicit UnsupportedExponent(const std::string& what, double p)
      : std::invalid_argument(what), p_(p) {}

  double exponent() const noexcept { return p_; }

private:
  double p_;
};

/// Problem data rejected by strict validation (e.g. a compatibility
/// mismatch between boundary and initial data).
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what, double max_violation = 0.0)
      : std::runtime_error(what), max_violation_(max_violation) {}

  double max_violation() const noexcept { return max_violation_; }

private:
  double max_violation_;
};

}  // namespace kzn

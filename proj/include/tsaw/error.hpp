#pragma once

#include <stdexcept>
#include <string>

namespace tsaw {

// Bad input or configuration. `field()` is a dotted path when the caller knows one.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what, std::string field = {})
      : std::invalid_argument(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Numerical budget violations: leaked mass above budget, singular systems,
// non-convergent iterations.
class NumericBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LeakBudgetExceeded : public NumericBudgetError {
 public:
  LeakBudgetExceeded(const std::string& what, double leak, double budget, long required_width = 0)
      : NumericBudgetError(what), leak_(leak), budget_(budget), required_width_(required_width) {}
  double leak() const noexcept { return leak_; }
  double budget() const noexcept { return budget_; }
  // Suggested window half-width (0 when no hint applies).
  long required_width() const noexcept { return required_width_; }

 private:
  double leak_;
  double budget_;
  long required_width_;
};

// The walk tried to step off a leaf sitting at the truncation depth.
class TruncationEscape : public std::runtime_error {
 public:
  TruncationEscape(const std::string& what, long vertex) : std::runtime_error(what), vertex_(vertex) {}
  long vertex() const noexcept { return vertex_; }

 private:
  long vertex_;
};

}  // namespace tsaw

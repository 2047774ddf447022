#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tsbsde {

/// Left-continuous piecewise-constant function of time: values[k] on
/// (breaks[k-1], breaks[k]], the last value beyond the last break.
///
/// Literal form: "2" for a constant, "0.5:1, 2" for 1 up to t = 0.5 and 2 after.
class StepFunction {
 public:
  StepFunction(double constant = 0.0) : values_{constant} {}
  StepFunction(std::vector<double> breaks, std::vector<double> values);

  static StepFunction parse(std::string_view literal);
  std::string to_string() const;

  double operator()(double t) const;
  double sup_abs() const;
  bool is_zero() const;
  bool is_constant() const { return values_.size() == 1; }

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const StepFunction&) const = default;

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

/// Shortest decimal text that parses back to the same double ("%.17g" precision at most).
std::string format_double(double v);
/// Strict decimal parse of the whole string; throws ValidationError naming `what`.
double parse_double(std::string_view text, std::string_view what);

}  // namespace tsbsde

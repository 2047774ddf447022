#include "tsbsde/stepfunction.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "tsbsde/errors.hpp"

namespace tsbsde {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ValidationError("cannot parse number '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

StepFunction::StepFunction(std::vector<double> breaks, std::vector<double> values)
    : breaks_(std::move(breaks)), values_(std::move(values)) {
  if (values_.size() != breaks_.size() + 1) throw ValidationError("step function: need one more value than breaks");
  for (std::size_t k = 1; k < breaks_.size(); ++k) {
    if (!(breaks_[k] > breaks_[k - 1])) throw ValidationError("step function: breaks must increase");
  }
}

StepFunction StepFunction::parse(std::string_view literal) {
  std::vector<double> breaks, values;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = literal.find(',', start);
    const std::string_view item = trim(literal.substr(start, comma == std::string_view::npos ? comma : comma - start));
    const std::size_t colon = item.find(':');
    const bool last = comma == std::string_view::npos;
    if (colon == std::string_view::npos) {
      if (!last) throw ValidationError("step function '" + std::string(literal) + "': only the last item may omit 't:'");
      values.push_back(parse_double(item, "step function value"));
    } else {
      if (last) throw ValidationError("step function '" + std::string(literal) + "': last item must be a bare value");
      breaks.push_back(parse_double(item.substr(0, colon), "step function break"));
      values.push_back(parse_double(item.substr(colon + 1), "step function value"));
    }
    if (last) break;
    start = comma + 1;
  }
  return StepFunction(std::move(breaks), std::move(values));
}

std::string StepFunction::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < breaks_.size(); ++k) {
    out += format_double(breaks_[k]) + ":" + format_double(values_[k]) + ", ";
  }
  return out + format_double(values_.back());
}

double StepFunction::operator()(double t) const {
  const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), t);
  return values_[static_cast<std::size_t>(it - breaks_.begin())];
}

double StepFunction::sup_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool StepFunction::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

}  // namespace tsbsde

#include "tsbsde/timescale.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "tsbsde/errors.hpp"

namespace tsbsde {

namespace {

constexpr double kTol = TimeScale::kTolerance;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view text, std::string_view item) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ValidationError("time scale: cannot parse number in item '" + std::string(item) + "'");
  }
  return value;
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

TimeScale::TimeScale(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw ValidationError("time scale: empty");
  if (segments_.front().lo != 0.0) throw ValidationError("time scale: must start at 0");
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const Segment& s = segments_[k];
    if (!(s.lo <= s.hi)) {
      throw ValidationError("time scale: segment " + format_number(s.lo) + ".." + format_number(s.hi) +
                            " has lo > hi");
    }
    if (k > 0 && !(s.lo > segments_[k - 1].hi + kTol)) {
      throw ValidationError("time scale: segments must be sorted with positive gaps (item " +
                            std::to_string(k + 1) + ")");
    }
  }
  if (!(horizon() > 0.0)) throw ValidationError("time scale: horizon must be positive");
}

TimeScale TimeScale::parse(std::string_view literal) {
  std::vector<Segment> segments;
  std::size_t start = 0;
  while (start <= literal.size()) {
    std::size_t comma = literal.find(',', start);
    if (comma == std::string_view::npos) comma = literal.size();
    std::string_view item = trim(literal.substr(start, comma - start));
    if (item.empty()) throw ValidationError("time scale: empty item in '" + std::string(literal) + "'");
    std::size_t dots = item.find("..");
    if (dots == std::string_view::npos) {
      double x = parse_number(item, item);
      segments.push_back({x, x});
    } else {
      segments.push_back({parse_number(item.substr(0, dots), item), parse_number(item.substr(dots + 2), item)});
    }
    start = comma + 1;
  }
  return TimeScale(std::move(segments));
}

TimeScale TimeScale::interval(double hi) { return TimeScale({{0.0, hi}}); }

TimeScale TimeScale::isolated(std::span<const double> points) {
  std::vector<Segment> segments;
  segments.reserve(points.size());
  for (double p : points) segments.push_back({p, p});
  return TimeScale(std::move(segments));
}

std::string TimeScale::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    if (k > 0) out += ", ";
    out += format_number(segments_[k].lo);
    if (!segments_[k].isolated()) out += ".." + format_number(segments_[k].hi);
  }
  return out;
}

bool TimeScale::contains(double t) const {
  for (const Segment& s : segments_) {
    if (t >= s.lo - kTol && t <= s.hi + kTol) return true;
  }
  return false;
}

std::size_t TimeScale::segment_of(double t) const {
  // Segments are sorted: the candidate is the last one with lo - tol <= t.
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const Segment& s) { return v < s.lo - kTol; });
  if (it != segments_.begin()) {
    --it;
    if (t <= it->hi + kTol) return static_cast<std::size_t>(it - segments_.begin());
  }
  throw DomainError("time " + format_number(t) + " is not in the time scale " + to_string());
}

double TimeScale::sigma(double t) const {
  std::size_t k = segment_of(t);
  if (std::abs(t - segments_[k].hi) <= kTol) {
    return k + 1 == segments_.size() ? segments_[k].hi : segments_[k + 1].lo;
  }
  return t;
}

double TimeScale::rho(double t) const {
  std::size_t k = segment_of(t);
  if (std::abs(t - segments_[k].lo) <= kTol) {
    return k == 0 ? 0.0 : segments_[k - 1].hi;
  }
  return t;
}

double TimeScale::sup_at_or_below(double x) const {
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    if (x >= it->lo - kTol) {
      if (x >= it->hi - kTol) return it->hi;
      if (x <= it->lo + kTol) return it->lo;
      return x;
    }
  }
  throw DomainError("sup_at_or_below: " + format_number(x) + " lies before the time scale");
}

double TimeScale::dense_measure(double a, double b) const {
  double total = 0.0;
  for (const Segment& s : segments_) {
    double lo = std::max(s.lo, a);
    double hi = std::min(s.hi, b);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

double TimeScale::nabla_measure(double a, double b) const {
  if (!contains(a) || !contains(b)) throw DomainError("nabla_measure: endpoints must lie in the time scale");
  if (a > b) throw DomainError("nabla_measure: requires a <= b");
  double total = dense_measure(a, b);
  for (std::size_t k = 1; k < segments_.size(); ++k) {
    double s = segments_[k].lo;
    if (s > a + kTol && s <= b + kTol) total += s - segments_[k - 1].hi;
  }
  return total;
}

double TimeScale::exp_beta(double beta, double t, double t0) const {
  if (!contains(t) || !contains(t0)) throw DomainError("exp_beta: times must lie in the time scale");
  if (t0 > t + kTol) throw DomainError("exp_beta: requires t0 <= t");
  double product = 1.0;
  for (std::size_t k = 1; k < segments_.size(); ++k) {
    double s = segments_[k].lo;
    if (s > t0 + kTol && s <= t + kTol) {
      double factor = 1.0 + beta * (s - segments_[k - 1].hi);
      if (!(factor > 0.0)) {
        throw AdmissibilityError("exp_beta: 1 + beta*nu(" + format_number(s) + ") = " + format_number(factor) +
                                 " is not positive");
      }
      product *= factor;
    }
  }
  return std::exp(beta * dense_measure(t0, t)) * product;
}

GridScale::GridScale(TimeScale scale, double delta) : scale_(std::move(scale)), delta_(delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("partition: delta must be positive");
  const double T = scale_.horizon();
  times_.push_back(0.0);
  double t = 0.0;
  while (t < T) {
    double candidate = scale_.sup_at_or_below(t + delta);
    double next = candidate > t + kTol ? candidate : scale_.sigma(t);
    if (!(next > t)) throw NumericalError("partition: no progress at t = " + format_number(t));
    times_.push_back(next);
    t = next;
  }

  const std::size_t n = times_.size();
  nu_.assign(n, 0.0);
  kinds_.assign(n, StepKind::dense_refinement);
  left_scattered_.assign(n, 0);
  right_scattered_.assign(n, 0);
  const auto& segs = scale_.segments();
  std::vector<std::size_t> seg(n);
  for (std::size_t i = 0; i < n; ++i) {
    seg[i] = scale_.segment_of(times_[i]);
    left_scattered_[i] = scale_.left_scattered(times_[i]) ? 1 : 0;
    right_scattered_[i] = scale_.right_scattered(times_[i]) ? 1 : 0;
  }
  for (std::size_t i = 1; i < n; ++i) {
    nu_[i] = times_[i] - times_[i - 1];
    const std::size_t a = seg[i - 1];
    const std::size_t b = seg[i];
    if (a == b && !segs[a].isolated()) {
      kinds_[i] = StepKind::dense_refinement;
    } else if (b == a + 1 && times_[i - 1] == segs[a].hi && times_[i] == segs[b].lo) {
      kinds_[i] = StepKind::scattered_jump;
    } else {
      kinds_[i] = StepKind::coarse;
    }
  }
}

bool GridScale::resolves_scale() const {
  return std::none_of(kinds_.begin() + 1, kinds_.end(), [](StepKind k) { return k == StepKind::coarse; });
}

std::size_t GridScale::index_of(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t - kTol);
  if (it == times_.end() || std::abs(*it - t) > kTol) {
    throw DomainError("time " + format_number(t) + " is not a grid point");
  }
  return static_cast<std::size_t>(it - times_.begin());
}

double GridScale::max_nu() const { return *std::max_element(nu_.begin(), nu_.end()); }

TimeScale GridScale::as_isolated() const { return TimeScale::isolated(times_); }

double nabla_integral(const GridScale& grid, std::span<const double> f) {
  if (f.size() != grid.size()) throw ValidationError("nabla_integral: f must be sampled at every grid point");
  double total = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) total += f[i] * grid.nu(i);
  return total;
}

}  // namespace tsbsde

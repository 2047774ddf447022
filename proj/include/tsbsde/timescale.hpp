#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tsbsde {

/// One closed piece [lo, hi] of a time scale; lo == hi is an isolated point.
struct Segment {
  double lo = 0.0;
  double hi = 0.0;

  bool isolated() const { return lo == hi; }
  double length() const { return hi - lo; }
  bool operator==(const Segment&) const = default;
};

/// A bounded time scale: a finite union of disjoint closed intervals and
/// isolated points covering min 0 and max T.
///
/// Membership and boundary matching use an absolute tolerance of 1e-12.
/// Every query that returns a boundary point returns the stored boundary
/// value exactly, so grid times built from these answers compare equal.
class TimeScale {
 public:
  static constexpr double kTolerance = 1e-12;

  explicit TimeScale(std::vector<Segment> segments);

  /// Parses `lo..hi` / bare-number items separated by commas, e.g. "0..1, 3, 4, 5".
  static TimeScale parse(std::string_view literal);
  static TimeScale interval(double hi);
  static TimeScale isolated(std::span<const double> points);

  /// Literal form accepted by parse(); round-trips exactly.
  std::string to_string() const;

  const std::vector<Segment>& segments() const { return segments_; }
  double horizon() const { return segments_.back().hi; }

  bool contains(double t) const;
  /// Index of the segment holding t; throws DomainError if t is not in the scale.
  std::size_t segment_of(double t) const;

  double sigma(double t) const;
  double rho(double t) const;
  double mu(double t) const { return sigma(t) - t; }
  double nu(double t) const { return t - rho(t); }
  bool left_scattered(double t) const { return rho(t) < t; }
  bool right_scattered(double t) const { return sigma(t) > t; }

  /// Largest point of the scale that is <= x (x >= 0).
  double sup_at_or_below(double x) const;

  /// Lebesgue measure of (a, b] intersected with the scale.
  double dense_measure(double a, double b) const;
  /// nabla-measure of (a, b]: dense part plus the nu atoms of left-scattered points.
  double nabla_measure(double a, double b) const;

  /// Solution of nabla y(t) = beta * y(t-), y(t0) = 1, evaluated at t >= t0.
  double exp_beta(double beta, double t, double t0) const;

  bool operator==(const TimeScale&) const = default;

 private:
  std::vector<Segment> segments_;
};

enum class StepKind {
  dense_refinement,  // subdivides one nondegenerate interval
  scattered_jump,    // crosses exactly one gap: t_{i-1} = rho(t_i)
  coarse,            // swallows dense time together with a gap, or several gaps
};

/// The finite partition of a TimeScale produced by the delta-rule
///   t_i = sup (t_{i-1}, t_{i-1} + delta]  when that set is nonempty,
///   t_i = sigma(t_{i-1})                  otherwise.
///
/// Steps are numbered 1..steps(); step i is (t_{i-1}, t_i].
class GridScale {
 public:
  GridScale(TimeScale scale, double delta);

  const TimeScale& scale() const { return scale_; }
  double delta() const { return delta_; }
  double horizon() const { return times_.back(); }

  std::size_t size() const { return times_.size(); }
  std::size_t steps() const { return times_.size() - 1; }
  double time(std::size_t i) const { return times_[i]; }
  std::span<const double> times() const { return times_; }

  /// nabla-measure of step i, i >= 1; nu(0) is 0.
  double nu(std::size_t i) const { return nu_[i]; }
  StepKind kind(std::size_t step) const { return kinds_[step]; }
  bool dense_refinement(std::size_t step) const { return kinds_[step] == StepKind::dense_refinement; }
  bool left_scattered(std::size_t i) const { return left_scattered_[i] != 0; }
  bool right_scattered(std::size_t i) const { return right_scattered_[i] != 0; }

  /// False when some step is coarse; such grids do not resolve the scale's gaps.
  bool resolves_scale() const;
  std::size_t index_of(double t) const;
  double max_nu() const;

  /// The grid points viewed as an isolated time scale.
  TimeScale as_isolated() const;

 private:
  TimeScale scale_;
  double delta_;
  std::vector<double> times_;
  std::vector<double> nu_;
  std::vector<StepKind> kinds_;
  std::vector<unsigned char> left_scattered_;
  std::vector<unsigned char> right_scattered_;
};

inline GridScale partition(const TimeScale& scale, double delta) { return GridScale(scale, delta); }

/// Right-endpoint nabla sum: sum_i f(t_i) * nu_i, with f sampled at every grid point.
double nabla_integral(const GridScale& grid, std::span<const double> f);

}  // namespace tsbsde

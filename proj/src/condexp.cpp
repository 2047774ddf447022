#include "tsbsde/condexp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tsbsde/errors.hpp"
#include "tsbsde/parallel.hpp"

namespace tsbsde {

GaussHermite::GaussHermite(std::size_t n) {
  if (n < 2) throw ValidationError("GaussHermite: at least 2 nodes required");
  // Newton iteration on orthonormal Hermite polynomials (physicists' weight e^{-x^2}).
  const double pi_m4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  const std::size_t half = (n + 1) / 2;
  std::vector<double> x(n), w(n);
  double z = 0.0;
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * nd + 1.0) - 1.85575 * std::pow(2.0 * nd + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(nd, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      double p1 = pi_m4, p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (jd + 1.0)) * p2 - std::sqrt(jd / (jd + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * nd) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    if (n % 2 == 1 && i == half - 1) z = 0.0;
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
  }
  abscissa_.resize(n);
  weight_.resize(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    // Ascending order, rescaled to the standard normal density.
    abscissa_[k] = std::numbers::sqrt2 * x[n - 1 - k];
    weight_[k] = w[n - 1 - k] / std::sqrt(std::numbers::pi);
  }
  // Sum the smallest weights first, then normalize symmetric pairs identically.
  std::vector<double> sorted = weight_;
  std::sort(sorted.begin(), sorted.end());
  for (double v : sorted) total += v;
  for (double& v : weight_) v /= total;
}

MonotoneCubic::MonotoneCubic(double first, double spacing, std::span<const double> values)
    : first_(first), spacing_(spacing), values_(values.begin(), values.end()) {
  const std::size_t n = values_.size();
  if (n < 5) throw ValidationError("MonotoneCubic: at least 5 nodes required");
  if (!(spacing > 0.0)) throw ValidationError("MonotoneCubic: spacing must be positive");
  const double h = spacing;
  const auto& f = values_;
  slopes_.assign(n, 0.0);
  auto& d = slopes_;
  d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
  d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
  }
  d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / (12.0 * h);
  d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / (12.0 * h);
  left_curvature_ = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
  right_curvature_ = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / (h * h);

  const bool nonnegative = std::all_of(f.begin(), f.end(), [](double v) { return v >= 0.0; });
  auto clip_extremum = [&](std::size_t i) {
    if (nonnegative) {
      const double bound = 3.0 * f[i] / h;
      d[i] = std::clamp(d[i], -bound, bound);
    }
  };
  auto limit_monotone = [&](std::size_t i, double secant_a, double secant_b) {
    if (d[i] * secant_b <= 0.0) {
      d[i] = 0.0;
    } else {
      d[i] = std::copysign(std::min(std::abs(d[i]), 3.0 * std::min(std::abs(secant_a), std::abs(secant_b))),
                           secant_b);
    }
  };
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double left = (f[i] - f[i - 1]) / h;
    const double right = (f[i + 1] - f[i]) / h;
    const double s = left * right;
    if (s > 0.0) {
      limit_monotone(i, left, right);
    } else if (s < 0.0) {
      clip_extremum(i);
    } else {
      d[i] = 0.0;
    }
  }
  for (std::size_t i : {std::size_t{0}, n - 1}) {
    const double secant = i == 0 ? (f[1] - f[0]) / h : (f[n - 1] - f[n - 2]) / h;
    if (secant == 0.0) {
      d[i] = 0.0;
    } else if (d[i] * secant > 0.0) {
      limit_monotone(i, secant, secant);
    } else {
      clip_extremum(i);
    }
  }
}

double MonotoneCubic::operator()(double x) const {
  const std::size_t n = values_.size();
  const double u = (x - first_) / spacing_;
  if (u <= 0.0) {
    const double dx = x - first_;
    return values_[0] + slopes_[0] * dx + 0.5 * left_curvature_ * dx * dx;
  }
  const double last = static_cast<double>(n - 1);
  if (u >= last) {
    const double dx = x - (first_ + last * spacing_);
    return values_[n - 1] + slopes_[n - 1] * dx + 0.5 * right_curvature_ * dx * dx;
  }
  std::size_t k = static_cast<std::size_t>(u);
  if (k > n - 2) k = n - 2;
  const double s = u - static_cast<double>(k);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * values_[k] + h10 * spacing_ * slopes_[k] + h01 * values_[k + 1] + h11 * spacing_ * slopes_[k + 1];
}

SpatialMesh SpatialMesh::uniform(double half_width, double horizon, std::size_t count, double time) {
  if (count < 5 || count % 2 == 0) throw ValidationError("SpatialMesh: node count must be odd and >= 5");
  if (!(half_width > 0.0) || !(horizon > 0.0)) throw ValidationError("SpatialMesh: half width and horizon must be positive");
  SpatialMesh mesh;
  const double span = half_width * std::sqrt(horizon);
  const double centre = static_cast<double>(count - 1) / 2.0;
  const double h = span / centre;
  mesh.nodes.resize(count);
  for (std::size_t k = 0; k < count; ++k) mesh.nodes[k] = (static_cast<double>(k) - centre) * h;
  mesh.values.assign(count, 0.0);
  mesh.time = time;
  return mesh;
}

void SpatialMesh::validate() const {
  if (nodes.size() < 5) throw ValidationError("SpatialMesh: at least 5 nodes required");
  if (values.size() != nodes.size()) throw ValidationError("SpatialMesh: node and value counts differ");
  const double h = spacing();
  if (!(h > 0.0)) throw ValidationError("SpatialMesh: nodes must be strictly increasing");
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double step = nodes[k] - nodes[k - 1];
    if (!(step > 0.0)) throw ValidationError("SpatialMesh: nodes must be strictly increasing");
    if (std::abs(step - h) > 1e-9 * h) throw ValidationError("SpatialMesh: nodes must be uniformly spaced");
  }
}

SpatialMesh quadrature_condexp(const SpatialMesh& next, double variance, const GaussHermite& rule) {
  if (next.nodes.empty()) throw ValidationError("quadrature_condexp: empty mesh");
  next.validate();
  if (variance < 0.0) throw ValidationError("quadrature_condexp: variance must be nonnegative");
  if (variance == 0.0) return next;
  SpatialMesh out = next;
  out.time = next.time - variance;
  const MonotoneCubic f = next.interpolant();
  const double sd = std::sqrt(variance);
  const auto a = rule.abscissa();
  const auto wt = rule.weight();
  parallel_for(next.nodes.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) acc += wt[k] * f(next.nodes[i] + sd * a[k]);
      out.values[i] = acc;
    }
  });
  return out;
}

RegressionBasis::RegressionBasis(std::size_t dims, std::size_t degree) : dims_(dims), degree_(degree) {
  if (dims == 0) throw ValidationError("RegressionBasis: dims must be positive");
  // Enumerate exponent tuples by total degree, then lexicographically.
  std::vector<unsigned> current(dims, 0);
  for (std::size_t total = 0; total <= degree; ++total) {
    std::vector<std::vector<unsigned>> level;
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t remaining) {
      if (pos + 1 == dims) {
        current[pos] = static_cast<unsigned>(remaining);
        level.push_back(current);
        return;
      }
      for (std::size_t e = remaining + 1; e-- > 0;) {
        current[pos] = static_cast<unsigned>(e);
        rec(pos + 1, remaining - e);
      }
    };
    rec(0, total);
    for (const auto& row : level) exponents_.insert(exponents_.end(), row.begin(), row.end());
  }
}

void RegressionBasis::evaluate(std::span<const double> w, std::span<double> out) const {
  const std::size_t m = size();
  for (std::size_t r = 0; r < m; ++r) {
    double v = 1.0;
    for (std::size_t j = 0; j < dims_; ++j) {
      for (unsigned e = 0; e < exponents_[r * dims_ + j]; ++e) v *= w[j];
    }
    out[r] = v;
  }
}

namespace {

constexpr std::size_t kBlock = 4096;

}  // namespace

Projection::Projection(const PathEnsemble& ensemble, std::size_t t_index, const RegressionBasis& basis)
    : ensemble_(&ensemble), t_index_(t_index), basis_(basis) {
  if (basis.dims() != ensemble.dims()) throw ValidationError("Projection: basis and ensemble dimensions differ");
  if (t_index >= ensemble.points()) throw ValidationError("Projection: time index beyond the grid");
  const std::size_t m = basis.size();
  if (ensemble.paths() < m) {
    throw ValidationError("lsmc: " + std::to_string(ensemble.paths()) + " paths cannot fit " + std::to_string(m) +
                          " basis functions");
  }
  const double t = ensemble.grid().time(t_index);
  scale_ = t > 0.0 ? 1.0 / std::sqrt(t) : 1.0;

  const std::size_t n = ensemble.paths();
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<Eigen::MatrixXd> partial(blocks, Eigen::MatrixXd::Zero(m, m));
  parallel_for(blocks, [&](std::size_t begin, std::size_t end) {
    std::vector<double> phi(m);
    for (std::size_t b = begin; b < end; ++b) {
      for (std::size_t p = b * kBlock; p < std::min(n, (b + 1) * kBlock); ++p) {
        features(p, phi);
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c <= r; ++c) partial[b](r, c) += phi[r] * phi[c];
      }
    }
  });
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (const auto& g : partial) gram += g;
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram);
  cod.setThreshold(1e-12);
  rank_ = static_cast<std::size_t>(cod.rank());
  gram_pinv_ = cod.pseudoInverse();
}

void Projection::features(std::size_t path, std::span<double> out) const {
  const std::size_t d = basis_.dims();
  double w[16];
  std::vector<double> heap;
  double* z = w;
  if (d > 16) {
    heap.resize(d);
    z = heap.data();
  }
  const auto state = ensemble_->state(path, t_index_);
  for (std::size_t j = 0; j < d; ++j) z[j] = state[j] * scale_;
  basis_.evaluate({z, d}, out);
}

Eigen::VectorXd Projection::coefficients(std::span<const double> target) const {
  const std::size_t n = ensemble_->paths();
  if (target.size() != n) throw ValidationError("lsmc: target must have one value per path");
  const std::size_t m = basis_.size();
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<Eigen::VectorXd> partial(blocks, Eigen::VectorXd::Zero(m));
  parallel_for(blocks, [&](std::size_t begin, std::size_t end) {
    std::vector<double> phi(m);
    for (std::size_t b = begin; b < end; ++b) {
      for (std::size_t p = b * kBlock; p < std::min(n, (b + 1) * kBlock); ++p) {
        features(p, phi);
        for (std::size_t r = 0; r < m; ++r) partial[b](r) += phi[r] * target[p];
      }
    }
  });
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (const auto& v : partial) rhs += v;
  return gram_pinv_ * rhs;
}

std::vector<double> Projection::fit(std::span<const double> target) const {
  const Eigen::VectorXd coef = coefficients(target);
  const std::size_t n = ensemble_->paths();
  const std::size_t m = basis_.size();
  std::vector<double> fitted(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> phi(m);
    for (std::size_t p = begin; p < end; ++p) {
      features(p, phi);
      double v = 0.0;
      for (std::size_t r = 0; r < m; ++r) v += phi[r] * coef(static_cast<Eigen::Index>(r));
      fitted[p] = v;
    }
  });
  return fitted;
}

std::vector<double> lsmc_condexp(const PathEnsemble& ensemble, std::size_t t_index, std::span<const double> target,
                                 const RegressionBasis& basis) {
  if (t_index + 1 >= ensemble.points()) throw ValidationError("lsmc_condexp: t_index must precede the terminal point");
  return Projection(ensemble, t_index, basis).fit(target);
}

}  // namespace tsbsde

#include "flockyap/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace flockyap {

namespace {

constexpr double kQuadTol = 1e-10;   // absolute quadrature tolerance
constexpr double kRootTol = 1e-12;   // bisection tolerance on the argument

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate_adaptive(const F& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

Kernel Kernel::constant(double c0) {
  if (!(c0 > 0.0)) throw std::invalid_argument("Kernel: constant value must be positive");
  Kernel k;
  k.kind_ = Kind::Constant;
  k.value_ = c0;
  return k;
}

Kernel Kernel::power_law(double K, double sigma, double beta) {
  if (!(K > 0.0) || !(sigma > 0.0))
    throw std::invalid_argument("Kernel: power-law K and sigma must be positive");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("Kernel: power-law beta must lie in (0,1)");
  Kernel k;
  k.kind_ = Kind::PowerLaw;
  k.K_ = K;
  k.sigma_ = sigma;
  k.beta_ = beta;
  return k;
}

Kernel Kernel::tabulated(std::vector<double> grid, std::vector<double> values,
                         double lipschitz_bound) {
  if (grid.size() != values.size() || grid.size() < 2)
    throw std::invalid_argument("Kernel: tabulated grid/values mismatch");
  if (grid.front() != 0.0)
    throw std::invalid_argument("Kernel: tabulated grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("Kernel: tabulated grid must be strictly increasing");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0))
      throw std::invalid_argument("Kernel: tabulated values must be strictly positive");
    if (i > 0 && values[i] > values[i - 1] + 1e-15)
      throw std::invalid_argument("Kernel: tabulated values must be non-increasing");
  }
  Kernel k;
  k.kind_ = Kind::Tabulated;
  k.grid_ = std::move(grid);
  k.values_ = std::move(values);
  k.lipschitz_ = lipschitz_bound;
  return k;
}

double Kernel::operator()(double r) const {
  if (r < 0.0) throw std::invalid_argument("Kernel: negative radius");
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::PowerLaw:
      return K_ * std::pow(sigma_ + r, -beta_);
    case Kind::Tabulated: {
      if (r >= grid_.back()) return values_.back();  // hold last value
      const auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
      const std::size_t j = static_cast<std::size_t>(it - grid_.begin());
      const double t = (r - grid_[j - 1]) / (grid_[j] - grid_[j - 1]);
      return values_[j - 1] + t * (values_[j] - values_[j - 1]);
    }
  }
  return value_;
}

double Kernel::primitive(double from, double to) const {
  if (from < 0.0 || to < 0.0) throw std::invalid_argument("Kernel: negative radius");
  switch (kind_) {
    case Kind::Constant:
      return value_ * (to - from);
    case Kind::PowerLaw: {
      const double e = 1.0 - beta_;
      return K_ / e * (std::pow(sigma_ + to, e) - std::pow(sigma_ + from, e));
    }
    case Kind::Tabulated:
      return integrate_adaptive([this](double r) { return (*this)(r); }, from, to, kQuadTol);
  }
  return 0.0;
}

HypothesisKReport check_hypothesis_k(const Kernel& kernel, double K, double sigma,
                                     double beta, double r_max, int n_grid) {
  if (!(r_max > 0.0) || n_grid < 2)
    throw std::invalid_argument("check_hypothesis_k: need r_max > 0 and n_grid >= 2");
  HypothesisKReport rep;
  rep.beta_in_range = (beta > 0.0 && beta < 0.5);
  if (!rep.beta_in_range) {
    rep.ok = false;
    std::ostringstream os;
    os << "beta = " << beta << " outside the open interval (0, 1/2)";
    rep.message = os.str();
    return rep;
  }
  for (int i = 0; i < n_grid; ++i) {
    const double r = r_max * static_cast<double>(i) / (n_grid - 1);
    const double bound = K * std::pow(sigma + r, -beta);
    const double val = kernel(r);
    if (val < bound * (1.0 - 1e-12)) {
      rep.ok = false;
      rep.first_violation_r = r;
      rep.violation_gap = bound - val;
      std::ostringstream os;
      os << "phi(" << r << ") = " << val << " < K/(sigma+r)^beta = " << bound;
      rep.message = os.str();
      return rep;
    }
  }
  rep.ok = true;
  rep.message = "phi dominates K/(sigma+r)^beta on [0, r_max]";
  return rep;
}

RescaledKernel::RescaledKernel(Kernel base, int n_agents, double tau, double v0,
                               double x0_dev)
    : base_(std::move(base)), n_agents_(n_agents), tau_(tau), v0_(v0), x0_dev_(x0_dev) {
  if (n_agents_ < 1) throw std::invalid_argument("RescaledKernel: n_agents must be >= 1");
  if (!(tau_ > 0.0)) throw std::invalid_argument("RescaledKernel: tau must be positive");
  if (v0_ < 0.0 || x0_dev_ < 0.0)
    throw std::invalid_argument("RescaledKernel: V(0) and X(0) must be non-negative");
  scale_ = 2.0 * std::sqrt(static_cast<double>(n_agents_));
}

double RescaledKernel::rescale(double r) const { return scale_ * (r + tau_ * v0_); }

double RescaledKernel::operator()(double r) const {
  if (r < 0.0) throw std::invalid_argument("RescaledKernel: negative radius");
  return base_(rescale(r));
}

double RescaledKernel::primitive(double X) const {
  if (X < 0.0) throw std::invalid_argument("RescaledKernel: negative radius");
  switch (base_.kind()) {
    case Kernel::Kind::Constant:
      return base_.constant_value() * (X - x0_dev_);
    case Kernel::Kind::PowerLaw: {
      // substitute u = sigma + 2 sqrt(N)(r + tau v0)
      const double e = 1.0 - base_.beta();
      const double ua = base_.sigma() + rescale(x0_dev_);
      const double ub = base_.sigma() + rescale(X);
      return base_.K() / (scale_ * e) * (std::pow(ub, e) - std::pow(ua, e));
    }
    case Kernel::Kind::Tabulated: {
      const double lo = std::min(x0_dev_, X), hi = std::max(x0_dev_, X);
      const double v =
          integrate_adaptive([this](double r) { return (*this)(r); }, lo, hi, kQuadTol);
      return X >= x0_dev_ ? v : -v;
    }
  }
  return 0.0;
}

double RescaledKernel::inverse_primitive(double y) const {
  if (y < 0.0) throw std::invalid_argument("RescaledKernel: inverse_primitive needs y >= 0");
  if (y == 0.0) return x0_dev_;
  switch (base_.kind()) {
    case Kernel::Kind::Constant:
      return x0_dev_ + y / base_.constant_value();
    case Kernel::Kind::PowerLaw: {
      const double e = 1.0 - base_.beta();
      const double ua = base_.sigma() + rescale(x0_dev_);
      const double ub = std::pow(scale_ * e * y / base_.K() + std::pow(ua, e), 1.0 / e);
      return (ub - base_.sigma()) / scale_ - tau_ * v0_;
    }
    case Kernel::Kind::Tabulated:
      break;  // bracketing + bisection below
  }
  // phi_tau is positive so Phi_tau is strictly increasing; double the bracket
  // until it contains y (phi_tau is bounded below by its tail value).
  double lo = x0_dev_, hi = x0_dev_ + 1.0;
  while (primitive(hi) < y) {
    lo = hi;
    hi = x0_dev_ + 2.0 * (hi - x0_dev_);
    if (!std::isfinite(hi)) throw std::runtime_error("inverse_primitive: bracket overflow");
  }
  while (hi - lo > kRootTol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (primitive(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double critical_radius(const RescaledKernel& rk, double eps0, double c, double tau,
                       double mu, double alpha1, double beta1, double v0) {
  if (!(eps0 > 0.0)) throw std::invalid_argument("critical_radius: eps0 must be positive");
  if (!(mu > 0.0) || !(tau > 0.0))
    throw std::invalid_argument("critical_radius: mu and tau must be positive");
  const double arg =
      2.0 * std::sqrt((1.0 + c * c) * tau) * (alpha1 + beta1 * eps0) * v0 / (mu * eps0);
  return rk.inverse_primitive(arg);
}

}  // namespace flockyap

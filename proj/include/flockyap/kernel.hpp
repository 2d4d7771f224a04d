#ifndef FLOCKYAP_KERNEL_HPP
#define FLOCKYAP_KERNEL_HPP

#include <string>
#include <vector>

namespace flockyap {

// Positive, non-increasing interaction kernel phi. The power-law family is
// phi(r) = K / (sigma + r)^beta with beta in (0,1); tabulated kernels use
// linear interpolation on an explicit grid and hold the last value beyond it.
class Kernel {
 public:
  enum class Kind { Constant, PowerLaw, Tabulated };

  static Kernel constant(double c0);
  static Kernel power_law(double K, double sigma, double beta);
  static Kernel tabulated(std::vector<double> grid, std::vector<double> values,
                          double lipschitz_bound);

  double operator()(double r) const;  // throws on r < 0

  Kind kind() const { return kind_; }
  double constant_value() const { return value_; }
  double K() const { return K_; }
  double sigma() const { return sigma_; }
  double beta() const { return beta_; }
  double lipschitz_bound() const { return lipschitz_; }

  // Primitive of the raw kernel, int_{from}^{to} phi(r) dr. Closed form for
  // constant and power-law kernels, adaptive quadrature otherwise.
  double primitive(double from, double to) const;

 private:
  Kernel() = default;
  Kind kind_ = Kind::Constant;
  double value_ = 1.0;
  double K_ = 1.0, sigma_ = 1.0, beta_ = 0.25;
  std::vector<double> grid_, values_;
  double lipschitz_ = 0.0;
};

struct HypothesisKReport {
  bool ok = false;
  bool beta_in_range = false;
  double first_violation_r = -1.0;  // < 0 when no violation found
  double violation_gap = 0.0;       // bound(r) - phi(r) at the witness
  std::string message;
};

// Checks beta in (0, 1/2) and phi(r) >= K/(sigma+r)^beta on a uniform grid
// over [0, r_max]. Violations are report content, not errors.
HypothesisKReport check_hypothesis_k(const Kernel& kernel, double K, double sigma,
                                     double beta, double r_max, int n_grid);

// phi_tau(r) = phi(2 sqrt(N) (r + tau V(0))) together with its primitive
// Phi_tau anchored at X(0) and the inverse of that primitive.
class RescaledKernel {
 public:
  RescaledKernel(Kernel base, int n_agents, double tau, double v0, double x0_dev);

  double operator()(double r) const;        // phi_tau, defined for r >= 0
  double primitive(double X) const;          // Phi_tau(X), zero at X(0)
  double inverse_primitive(double y) const;  // throws on y < 0

  const Kernel& base() const { return base_; }
  int n_agents() const { return n_agents_; }
  double tau() const { return tau_; }
  double v0() const { return v0_; }
  double x0_dev() const { return x0_dev_; }

 private:
  double rescale(double r) const;  // 2 sqrt(N) (r + tau v0)
  Kernel base_;
  int n_agents_;
  double tau_, v0_, x0_dev_;
  double scale_;  // 2 sqrt(N)
};

// Critical radius X_M(eps0) = Phi_tau^{-1}( 2 sqrt((1+c^2) tau) (alpha1 +
// beta1 eps0) V(0) / (mu eps0) ).
double critical_radius(const RescaledKernel& rk, double eps0, double c, double tau,
                       double mu, double alpha1, double beta1, double v0);

}  // namespace flockyap

#endif

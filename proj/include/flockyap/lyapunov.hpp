#ifndef FLOCKYAP_LYAPUNOV_HPP
#define FLOCKYAP_LYAPUNOV_HPP

#include <optional>
#include <string>
#include <vector>

#include "flockyap/kernel.hpp"
#include "flockyap/simulate.hpp"

namespace flockyap {

// Empirical constants of the consensus proof, computed from the realized
// trajectory. A conservative mode widens the support ball by 10% and takes
// the kernel extrema over it instead of over realized pair distances.
struct LyapunovConstants {
  double R = 0.0;       // support radius of the trajectory
  double C_R = 0.0;     // sup of phi over [0, 2R]
  double C0 = 0.0;      // inf of phi over realized pair distances
  double c = 0.0;       // sup ||L(t,x)||_B^{1/2}
  double tau = 0.0;
  double mu = 0.0;
  double eps_const = 0.0;    // C0 mu / (2 c^3 tau sqrt(1+c^2))
  double lambda_const = 0.0; // 1/(2 sqrt(tau)) + c^3 sqrt(tau)/(2 eps)
  double alpha = 0.0;        // C0 mu / (4 sqrt((1+c^2)tau) (lambda + sqrt((1+c^2)tau)))
};

LyapunovConstants compute_constants(const Trajectory& traj, const Kernel& kernel,
                                    double tau, double mu, bool conservative = false);

// Tuning coefficients of the flocking chain; all depend only on (c, tau)
// except eps0 and T = 1/(4 eps0^2).
struct FlockingTuning {
  double eps0 = 0.0;
  double T_eps0 = 0.0;
  double alpha1 = 0.0, beta1 = 0.0;  // upper framing (alpha1/eps0 + beta1) V
  double alpha2 = 0.0, beta2 = 0.0;  // lower framing (alpha2/eps0 + beta2) V
  double alpha3 = 0.0, beta3 = 0.0;  // 2 sqrt((1+c^2) tau) (alpha1, beta1)
  double alpha2p = 0.0, beta2p = 0.0;  // 2 sqrt((1+c^2) tau) (alpha2, beta2)

  static FlockingTuning from(double c, double tau, double eps0);
  double epsilon_at(double t) const;  // eps0 / sqrt(1 - 2 eps0^2 t); throws at blow-up
  double lambda_at(double t) const;   // 1/(2 sqrt(tau)) + c^3 sqrt(tau)/(2 eps(t))

 private:
  double c_ = 0.0, tau_ = 0.0;
};

struct ResidualReport {
  double max_residual = -std::numeric_limits<double>::infinity();
  double at_time = 0.0;
  double tolerance = 0.0;
  int n_samples = 0;
  bool ok = false;
  std::string note;
};

struct WindowInequalityReport {
  double worst_margin = std::numeric_limits<double>::infinity();
  double at_time = 0.0;
  int n_vectors = 0;
  bool ok = false;
};

struct FlockingBound {
  double eps0 = 0.0;
  double T = 0.0;             // 1/(4 eps0^2)
  double x_m = 0.0;           // critical radius
  double prefactor = 0.0;     // (alpha1 + beta1 eps0)/(alpha2 + beta2 eps0) * V(0)
  double exponent = 0.0;      // mu phi_tau(x_m) / (4 (alpha3 + beta3 eps0) eps0)
  double v_bound_at_T = 0.0;  // prefactor * exp(-exponent)
  // Asymptotic chain through the proof constants (power-law kernels only).
  double A1 = 0.0, A2 = 0.0, A3 = 0.0, A4 = 0.0;
  double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0;
  double asymptotic_power = 0.0;   // (1 - 2 beta) / (2 (1 - beta))
  double asymptotic_bound = 0.0;   // C3 exp(-C4 mu T^power), valid for eps0 <= eps0_ref
  double eps0_ref = 1.0;
};

// Velocity bound at T = 1/(4 eps0^2) from the strict-dissipation chain, with
// the asymptotic form composed through the chain constants. Needs no states.
FlockingBound flocking_bound(const LyapunovConstants& consts, const FlockingTuning& tuning,
                             const RescaledKernel& rk, double v0, double eps0_ref = 1.0);

// Evaluates the time-varying Lyapunov functionals along a trajectory recorded
// with per-step states. Window integrals use iterated trapezoid quadrature on
// the integrator's breakpoint-aligned nodes (error O(step^2)).
class LyapunovMonitor {
 public:
  LyapunovMonitor(const Trajectory& traj, const WeightSchedule& schedule,
                  const Kernel& kernel, LyapunovConstants consts);

  const LyapunovConstants& constants() const { return consts_; }

  // psi_tau(t) = (1+c^2) tau Id - (1/tau) int_t^{t+tau} int_t^s L(sigma, x(sigma)).
  Eigen::MatrixXd psi_tau(double t) const;  // t must be a recorded sample
  // (1/tau) int_t^{t+tau} L(s, x(s)) ds.
  Eigen::MatrixXd window_average_state_laplacian(double t) const;

  double x_cal(double t) const;  // lambda X(t) + sqrt(B(psi x, x))
  double v_cal(double t, const FlockingTuning& tuning) const;

  // Residuals of Xdot_tau + alpha X_tau <= 0 by central differences at every
  // usable recorded sample (subsampled by `stride`).
  ResidualReport check_consensus_dissipation(int stride = 1) const;

  // Residuals of Vdot_tau + mu phi_tau(X) V / (2 sqrt((1+c^2) tau)) <= 0 on
  // [0, 0.99 * 2 T_eps0], plus the direct window inequality of the flocking
  // chain on random mean-zero vectors.
  ResidualReport check_flocking_dissipation(const FlockingTuning& tuning,
                                            int stride = 1) const;
  WindowInequalityReport check_window_inequality(int n_vectors, std::uint64_t seed) const;

  FlockingBound flocking_bound(const FlockingTuning& tuning, double eps0_ref = 1.0) const;
  RescaledKernel rescaled_kernel() const;
  int n_agents() const { return static_cast<int>(prefix_L_.front().rows()); }

  // Index of the recorded sample at time t (exact match within rounding).
  int sample_index(double t) const;
  double v0() const { return v0_; }
  double x0() const { return x0_; }

 private:
  const Trajectory& traj_;
  const WeightSchedule& schedule_;
  const Kernel& kernel_;
  LyapunovConstants consts_;
  double x0_ = 0.0, v0_ = 0.0;
  // prefix_L[k]  = int_0^{t_k} L(s, x(s)) ds   (trapezoid, cell-held weights)
  // prefix_iL[k] = int_0^{t_k} prefix_L(s) ds  (trapezoid)
  std::vector<Eigen::MatrixXd> prefix_L_;
  std::vector<Eigen::MatrixXd> prefix_iL_;
};

}  // namespace flockyap

#endif

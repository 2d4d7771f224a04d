#include "flockyap/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "flockyap/laplacian.hpp"

namespace flockyap {

namespace {

constexpr double kSlackCoeff = 25.0;  // O(step^2) discretization slack scale

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double normal_draw(std::uint64_t& state) {
  state = splitmix64(state);
  const double u1 = std::max(1e-16, static_cast<double>(state >> 11) * 0x1.0p-53);
  state = splitmix64(state);
  const double u2 = static_cast<double>(state >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

LyapunovConstants compute_constants(const Trajectory& traj, const Kernel& kernel,
                                    double tau, double mu, bool conservative) {
  if (traj.n_samples() == 0) throw std::invalid_argument("compute_constants: empty trajectory");
  if (!(tau > 0.0)) throw std::invalid_argument("compute_constants: tau must be positive");
  if (!(mu > 0.0 && mu <= 1.0))
    throw std::invalid_argument("compute_constants: mu must lie in (0,1]");

  LyapunovConstants k;
  k.tau = tau;
  k.mu = mu;
  double sup_lap = 0.0, max_pair = 0.0;
  for (const auto& m : traj.monitors) {
    k.R = std::max(k.R, m.radius);
    sup_lap = std::max(sup_lap, m.lap_norm);
    max_pair = std::max(max_pair, m.max_pair_dist);
  }
  if (conservative) k.R *= 1.1;
  k.c = std::sqrt(sup_lap);

  // phi is non-increasing but the extrema are taken on a grid so tabulated
  // kernels need no special casing.
  const int n_grid = 1024;
  k.C_R = 0.0;
  double c0 = std::numeric_limits<double>::infinity();
  const double r_hi = conservative ? 2.0 * k.R : max_pair;
  for (int i = 0; i < n_grid; ++i) {
    const double r = 2.0 * k.R * static_cast<double>(i) / (n_grid - 1);
    k.C_R = std::max(k.C_R, kernel(r));
  }
  if (conservative) {
    for (int i = 0; i < n_grid; ++i)
      c0 = std::min(c0, kernel(r_hi * static_cast<double>(i) / (n_grid - 1)));
  } else {
    for (const auto& m : traj.monitors) c0 = std::min(c0, kernel(m.max_pair_dist));
  }
  k.C0 = c0;

  const double c = k.c;
  const double root = std::sqrt((1.0 + c * c) * tau);
  k.eps_const = k.C0 * mu / (2.0 * std::pow(c, 3) * tau * std::sqrt(1.0 + c * c));
  // lambda = 1/(2 sqrt(tau)) + c^3 sqrt(tau) / (2 eps); written with eps
  // substituted so c -> 0 degenerates cleanly.
  k.lambda_const = 0.5 / std::sqrt(tau) +
                   std::pow(c, 6) * std::pow(tau, 1.5) * std::sqrt(1.0 + c * c) / (k.C0 * mu);
  k.alpha = k.C0 * mu / (4.0 * root * (k.lambda_const + root));
  return k;
}

FlockingTuning FlockingTuning::from(double c, double tau, double eps0) {
  if (!(tau > 0.0) || !(eps0 > 0.0))
    throw std::invalid_argument("FlockingTuning: tau and eps0 must be positive");
  FlockingTuning t;
  t.c_ = c;
  t.tau_ = tau;
  t.eps0 = eps0;
  t.T_eps0 = 1.0 / (4.0 * eps0 * eps0);
  const double c3 = std::pow(c, 3);
  const double root = std::sqrt((1.0 + c * c) * tau);
  t.alpha1 = 0.5 * c3 * std::sqrt(tau);
  t.beta1 = root + 0.5 / std::sqrt(tau);
  t.alpha2 = 0.25 * c3 * std::sqrt(2.0 * tau);
  t.beta2 = std::sqrt(tau) + 0.5 / std::sqrt(tau);
  t.alpha3 = 2.0 * root * t.alpha1;
  t.beta3 = 2.0 * root * t.beta1;
  t.alpha2p = 2.0 * root * t.alpha2;
  t.beta2p = 2.0 * root * t.beta2;
  return t;
}

double FlockingTuning::epsilon_at(double t) const {
  const double den = 1.0 - 2.0 * eps0 * eps0 * t;
  if (!(den > 0.0))
    throw std::domain_error("FlockingTuning: t at or beyond the epsilon blow-up time");
  return eps0 / std::sqrt(den);
}

double FlockingTuning::lambda_at(double t) const {
  return 0.5 / std::sqrt(tau_) + 0.5 * std::pow(c_, 3) * std::sqrt(tau_) / epsilon_at(t);
}

LyapunovMonitor::LyapunovMonitor(const Trajectory& traj, const WeightSchedule& schedule,
                                 const Kernel& kernel, LyapunovConstants consts)
    : traj_(traj), schedule_(schedule), kernel_(kernel), consts_(consts) {
  if (!traj.states_recorded)
    throw std::invalid_argument("LyapunovMonitor: trajectory was recorded without states");
  if (traj.n_samples() < 2)
    throw std::invalid_argument("LyapunovMonitor: trajectory too short");
  x0_ = traj.stats.front().X;
  v0_ = traj.stats.front().V.value_or(0.0);

  const auto n = static_cast<std::size_t>(traj.n_samples());
  const int N = static_cast<int>(traj.positions.front().rows());
  prefix_L_.resize(n);
  prefix_iL_.resize(n);
  prefix_L_[0] = Eigen::MatrixXd::Zero(N, N);
  prefix_iL_[0] = Eigen::MatrixXd::Zero(N, N);
  Eigen::MatrixXd left =
      state_laplacian(schedule.sample(traj.times[0]), traj.positions[0], kernel).m;
  for (std::size_t k = 1; k < n; ++k) {
    const double h = traj.times[k] - traj.times[k - 1];
    // the weight matrix of the cell containing [t_{k-1}, t_k)
    const WeightMatrix w = schedule.sample(traj.times[k - 1]);
    const Eigen::MatrixXd right = state_laplacian(w, traj.positions[k], kernel).m;
    prefix_L_[k] = prefix_L_[k - 1] + 0.5 * h * (left + right);
    prefix_iL_[k] = prefix_iL_[k - 1] + 0.5 * h * (prefix_L_[k - 1] + prefix_L_[k]);
    // left limit of the next interval uses the next cell's weights
    left = state_laplacian(schedule.sample(traj.times[k]), traj.positions[k], kernel).m;
  }
}

int LyapunovMonitor::sample_index(double t) const {
  const auto& ts = traj_.times;
  const auto it = std::lower_bound(ts.begin(), ts.end(), t - 1e-9);
  if (it == ts.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw std::invalid_argument("LyapunovMonitor: time not on the recorded grid");
  return static_cast<int>(it - ts.begin());
}

Eigen::MatrixXd LyapunovMonitor::psi_tau(double t) const {
  const auto i = static_cast<std::size_t>(sample_index(t));
  if (t + consts_.tau > traj_.t_final() + 1e-9)
    throw std::invalid_argument("LyapunovMonitor: window exceeds the recorded horizon");
  const auto j = static_cast<std::size_t>(sample_index(t + consts_.tau));
  const double tau = consts_.tau;
  const int N = static_cast<int>(prefix_L_[0].rows());
  // int_t^{t+tau} int_t^s L = (II(t+tau) - II(t)) - tau * I(t)
  const Eigen::MatrixXd dbl =
      prefix_iL_[j] - prefix_iL_[i] - tau * prefix_L_[i];
  const double c = consts_.c;
  return (1.0 + c * c) * tau * Eigen::MatrixXd::Identity(N, N) - dbl / tau;
}

Eigen::MatrixXd LyapunovMonitor::window_average_state_laplacian(double t) const {
  const auto i = static_cast<std::size_t>(sample_index(t));
  const auto j = static_cast<std::size_t>(sample_index(t + consts_.tau));
  return (prefix_L_[j] - prefix_L_[i]) / consts_.tau;
}

double LyapunovMonitor::x_cal(double t) const {
  const auto i = static_cast<std::size_t>(sample_index(t));
  const Eigen::MatrixXd psi = psi_tau(t);
  const AgentMatrix& x = traj_.positions[i];
  return consts_.lambda_const * traj_.stats[i].X +
         std::sqrt(std::max(0.0, variance_form(psi * x, x)));
}

double LyapunovMonitor::v_cal(double t, const FlockingTuning& tuning) const {
  if (traj_.order != SystemOrder::Second)
    throw std::invalid_argument("v_cal: second-order trajectory required");
  const auto i = static_cast<std::size_t>(sample_index(t));
  const Eigen::MatrixXd psi = psi_tau(t);
  const AgentMatrix& v = traj_.velocities[i];
  return tuning.lambda_at(t) * traj_.stats[i].V.value_or(0.0) +
         std::sqrt(std::max(0.0, variance_form(psi * v, v)));
}

ResidualReport LyapunovMonitor::check_consensus_dissipation(int stride) const {
  ResidualReport rep;
  const double tau = consts_.tau;
  const double h = traj_.step;
  std::vector<double> xc(static_cast<std::size_t>(traj_.n_samples()),
                         std::numeric_limits<double>::quiet_NaN());
  auto value = [&](int k) {
    auto idx = static_cast<std::size_t>(k);
    if (std::isnan(xc[idx])) xc[idx] = x_cal(traj_.times[idx]);
    return xc[idx];
  };
  const double x_cal0 = value(0);
  const double c = consts_.c;
  rep.tolerance = 1e-6 * x_cal0 +
                  kSlackCoeff * (1.0 + c * c) * (1.0 + 1.0 / tau) * x_cal0 * h * h;
  for (int k = stride; k + stride < traj_.n_samples(); k += stride) {
    const auto idx = static_cast<std::size_t>(k);
    if (traj_.times[idx + static_cast<std::size_t>(stride)] + tau >
        traj_.t_final() + 1e-9)
      break;
    const double dt = traj_.times[idx + static_cast<std::size_t>(stride)] -
                      traj_.times[idx - static_cast<std::size_t>(stride)];
    const double deriv = (value(k + stride) - value(k - stride)) / dt;
    const double residual = deriv + consts_.alpha * value(k);
    ++rep.n_samples;
    if (residual > rep.max_residual) {
      rep.max_residual = residual;
      rep.at_time = traj_.times[idx];
    }
  }
  rep.ok = rep.n_samples > 0 && rep.max_residual <= rep.tolerance;
  return rep;
}

ResidualReport LyapunovMonitor::check_flocking_dissipation(const FlockingTuning& tuning,
                                                           int stride) const {
  if (traj_.order != SystemOrder::Second)
    throw std::invalid_argument("check_flocking_dissipation: second-order trajectory required");
  ResidualReport rep;
  const double tau = consts_.tau;
  const double h = traj_.step;
  const double c = consts_.c;
  const RescaledKernel rk = rescaled_kernel();
  // Strong dissipation holds on [0, 2 T_eps0) but lambda(t) degenerates at
  // the epsilon blow-up, so the monitor truncates at 0.99 * 2 T_eps0.
  const double t_hi = std::min(0.99 * 2.0 * tuning.T_eps0, traj_.t_final() - tau);
  rep.note = "monitored on [0, min(0.99 * 2 T_eps0, horizon - tau)]";
  std::vector<double> vc(static_cast<std::size_t>(traj_.n_samples()),
                         std::numeric_limits<double>::quiet_NaN());
  auto value = [&](int k) {
    auto idx = static_cast<std::size_t>(k);
    if (std::isnan(vc[idx])) vc[idx] = v_cal(traj_.times[idx], tuning);
    return vc[idx];
  };
  const double v_cal0 = value(0);
  rep.tolerance = 1e-6 * v_cal0 +
                  kSlackCoeff * (1.0 + c * c) * (1.0 + 1.0 / tau) * v_cal0 * h * h;
  const double rate = consts_.mu / (2.0 * std::sqrt((1.0 + c * c) * tau));
  for (int k = stride; k + stride < traj_.n_samples(); k += stride) {
    const auto idx = static_cast<std::size_t>(k);
    if (traj_.times[idx] > t_hi) break;
    if (traj_.times[idx + static_cast<std::size_t>(stride)] + tau >
        traj_.t_final() + 1e-9)
      break;
    const double dt = traj_.times[idx + static_cast<std::size_t>(stride)] -
                      traj_.times[idx - static_cast<std::size_t>(stride)];
    const double deriv = (value(k + stride) - value(k - stride)) / dt;
    const double residual =
        deriv + rate * rk(traj_.stats[idx].X) * traj_.stats[idx].V.value_or(0.0);
    ++rep.n_samples;
    if (residual > rep.max_residual) {
      rep.max_residual = residual;
      rep.at_time = traj_.times[idx];
    }
  }
  rep.ok = rep.n_samples > 0 && rep.max_residual <= rep.tolerance;
  return rep;
}

WindowInequalityReport LyapunovMonitor::check_window_inequality(int n_vectors,
                                                       std::uint64_t seed) const {
  WindowInequalityReport rep;
  rep.n_vectors = n_vectors;
  const RescaledKernel rk = rescaled_kernel();
  const int N = static_cast<int>(traj_.positions.front().rows());
  const int d = static_cast<int>(traj_.positions.front().cols());
  const int last = sample_index(traj_.t_final());
  // spread the draws over usable window starts
  const int n_times = std::max(1, std::min(32, traj_.n_samples() / 64));
  std::uint64_t rng = seed;
  for (int q = 0; q < n_vectors; ++q) {
    const int ti = (q % n_times) * (last / (2 * n_times));
    const auto idx = static_cast<std::size_t>(ti);
    const double t = traj_.times[idx];
    if (t + consts_.tau > traj_.t_final() + 1e-9) continue;
    const Eigen::MatrixXd avg = window_average_state_laplacian(t);
    AgentMatrix w(N, d);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < d; ++j) w(i, j) = normal_draw(rng);
    w.rowwise() -= mean(w);
    const double bw = variance_form(w, w);
    if (bw < kVarianceFloor) continue;
    const double lhs = variance_form(avg * w, w);
    const double margin = lhs - consts_.mu * rk(traj_.stats[idx].X) * bw;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.at_time = t;
    }
  }
  rep.ok = rep.worst_margin >= -1e-8;
  return rep;
}

RescaledKernel LyapunovMonitor::rescaled_kernel() const {
  const int N = static_cast<int>(traj_.positions.front().rows());
  return RescaledKernel(kernel_, N, consts_.tau, v0_, x0_);
}

FlockingBound flocking_bound(const LyapunovConstants& consts, const FlockingTuning& tuning,
                             const RescaledKernel& rk, double v0, double eps0_ref) {
  FlockingBound b;
  b.eps0 = tuning.eps0;
  b.T = tuning.T_eps0;
  b.eps0_ref = eps0_ref;
  const double mu = consts.mu;
  b.x_m = critical_radius(rk, tuning.eps0, consts.c, consts.tau, mu, tuning.alpha1,
                          tuning.beta1, v0);
  b.prefactor = (tuning.alpha1 + tuning.beta1 * tuning.eps0) /
                (tuning.alpha2 + tuning.beta2 * tuning.eps0) * v0;
  b.exponent = mu * rk(b.x_m) / (4.0 * (tuning.alpha3 + tuning.beta3 * tuning.eps0) *
                                 tuning.eps0);
  b.v_bound_at_T = b.prefactor * std::exp(-b.exponent);

  const Kernel& base = rk.base();
  if (base.kind() != Kernel::Kind::PowerLaw) {
    b.asymptotic_bound = std::numeric_limits<double>::quiet_NaN();
    return b;  // asymptotic chain is defined through Hypothesis (K)
  }
  const double beta = base.beta();
  if (!(beta > 0.0 && beta < 0.5))
    throw std::domain_error("flocking_bound: asymptotic chain needs beta in (0, 1/2)");
  const double K = base.K(), sigma = base.sigma();
  const int N = rk.n_agents();
  const double twoRootN = 2.0 * std::sqrt(static_cast<double>(N));
  const double tau = consts.tau;
  const double root = std::sqrt((1.0 + consts.c * consts.c) * tau);
  const double e = 1.0 - beta;
  const double a = beta / e;
  const double x0 = rk.x0_dev();

  b.A1 = 2.0 * root * tuning.beta1 * v0 / mu;
  b.A2 = 2.0 * root * tuning.alpha1 * v0 / mu;
  b.A3 = std::pow(twoRootN, beta);
  const double sigma_p = sigma / twoRootN + tau * v0;
  b.A4 = K / e * (std::pow(sigma_p + x0, e) - std::pow(sigma + x0, e));

  const double A4_plus = std::max(b.A4, 0.0);
  b.C1 = e / K * (b.A3 * b.A1 + A4_plus) + std::pow(sigma + x0, e);
  b.C2 = e * b.A3 * b.A2 / K;
  b.C3 = std::max(tuning.alpha1 / tuning.alpha2, tuning.beta1 / tuning.beta2) * v0;

  const double W_ref = std::pow(b.C1 + b.C2 / eps0_ref, 1.0 / e);
  const double q = sigma * (1.0 - twoRootN) + twoRootN * tau * v0;
  const double M = twoRootN + std::max(q, 0.0) / W_ref;
  const double g_a3 = 1.0 + tuning.beta3 / tuning.alpha3 * eps0_ref;
  const double g_c = std::pow(1.0 + b.C1 * eps0_ref / b.C2, a);
  b.C4 = K * std::pow(M, -beta) * std::pow(b.C2, -a) * std::pow(2.0, 1.0 - a) /
         (4.0 * tuning.alpha3 * g_a3 * g_c);
  b.asymptotic_power = (1.0 - 2.0 * beta) / (2.0 * e);
  b.asymptotic_bound = b.C3 * std::exp(-b.C4 * mu * std::pow(b.T, b.asymptotic_power));
  return b;
}

FlockingBound LyapunovMonitor::flocking_bound(const FlockingTuning& tuning,
                                              double eps0_ref) const {
  return ::flockyap::flocking_bound(consts_, tuning, rescaled_kernel(), v0_, eps0_ref);
}

}  // namespace flockyap

#include "flockyap/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flockyap/laplacian.hpp"

namespace flockyap {

namespace {

// Drift of y under the state Laplacian built from held weights W:
// (-L(x) y)_i = (1/N) sum_j W_ij phi(|x_i-x_j|)(y_j - y_i).
AgentMatrix laplacian_drift(const WeightMatrix& w, const AgentMatrix& x,
                            const AgentMatrix& y, const Kernel& kernel) {
  const int N = static_cast<int>(x.rows());
  AgentMatrix out = AgentMatrix::Zero(x.rows(), x.cols());
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      const double wij = w.entries(i, j);
      if (wij == 0.0) continue;
      const double r = (x.row(i) - x.row(j)).norm();
      const double a = wij * kernel(r);
      const auto diff = (y.row(j) - y.row(i)).eval();
      out.row(i) += a * diff;
      out.row(j) -= a * diff;
    }
  return out / static_cast<double>(N);
}

void pair_extents(const AgentMatrix& x, double& dmin, double& dmax) {
  const int N = static_cast<int>(x.rows());
  dmin = std::numeric_limits<double>::infinity();
  dmax = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      const double r = (x.row(i) - x.row(j)).norm();
      dmin = std::min(dmin, r);
      dmax = std::max(dmax, r);
    }
}

}  // namespace

EnsembleState Trajectory::state_at(int k) const {
  if (!states_recorded || k < 0 || k >= n_samples())
    throw std::out_of_range("Trajectory: no recorded state at this index");
  EnsembleState s;
  s.n_agents = static_cast<int>(positions[static_cast<std::size_t>(k)].rows());
  s.dim = static_cast<int>(positions[static_cast<std::size_t>(k)].cols());
  s.positions = positions[static_cast<std::size_t>(k)];
  if (order == SystemOrder::Second) s.velocities = velocities[static_cast<std::size_t>(k)];
  s.time = times[static_cast<std::size_t>(k)];
  return s;
}

AgentMatrix rhs_first_order(double t, const EnsembleState& state,
                            const WeightSchedule& schedule, const Kernel& kernel) {
  return laplacian_drift(schedule.sample(t), state.positions, state.positions, kernel);
}

std::pair<AgentMatrix, AgentMatrix> rhs_second_order(double t, const EnsembleState& state,
                                                     const WeightSchedule& schedule,
                                                     const Kernel& kernel) {
  if (!state.velocities)
    throw std::invalid_argument("rhs_second_order: state has no velocities");
  return {*state.velocities,
          laplacian_drift(schedule.sample(t), state.positions, *state.velocities, kernel)};
}

Trajectory integrate(SystemOrder order, const AgentMatrix& x0,
                     const std::optional<AgentMatrix>& v0, const WeightSchedule& schedule,
                     const Kernel& kernel, const IntegrateOptions& options) {
  if (!(options.t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be positive");
  if (!(options.step > 0.0)) throw std::invalid_argument("integrate: step must be positive");
  if (options.record_stride < 1)
    throw std::invalid_argument("integrate: record_stride must be >= 1");
  const bool second = order == SystemOrder::Second;
  if (second != v0.has_value())
    throw std::invalid_argument("integrate: velocities present iff second order");

  AgentMatrix x = x0;
  AgentMatrix v = second ? *v0 : AgentMatrix();
  const Eigen::RowVectorXd x_mean0 = mean(x0);
  const Eigen::RowVectorXd v_mean0 = second ? mean(*v0).eval() : Eigen::RowVectorXd();

  Trajectory traj;
  traj.order = order;
  traj.step = options.step;
  traj.states_recorded = options.record_states;

  double prev_X = 0.0, prev_V = 0.0, prev_t = 0.0;
  double V_initial = 0.0;
  bool first_record = true;

  auto record = [&](double t) {
    VarianceStats st;
    st.X = std::sqrt(std::max(0.0, variance_form(x, x)));
    if (second) st.V = std::sqrt(std::max(0.0, variance_form(v, v)));
    StepMonitor mon;
    if (second) {
      mon.mean_drift = (mean(v) - v_mean0).norm();
      mon.affine_drift = (mean(x) - x_mean0 - t * v_mean0).norm();
    } else {
      mon.mean_drift = (mean(x) - x_mean0).norm();
    }
    if (!first_record) {
      const double dt = t - prev_t;
      if (second) mon.v_monotone_residual = *st.V - prev_V;
      mon.xdot_residual =
          second ? (st.X - prev_X) / dt - std::max(prev_V, *st.V)
                 : (st.X - prev_X) / dt;  // first order: X should not increase
    }
    mon.radius = x.rowwise().norm().maxCoeff();
    pair_extents(x, mon.min_pair_dist, mon.max_pair_dist);
    mon.lap_norm = b_operator_norm(state_laplacian(schedule.sample(t), x, kernel));
    traj.times.push_back(t);
    traj.stats.push_back(st);
    traj.monitors.push_back(mon);
    if (options.record_states) {
      traj.positions.push_back(x);
      if (second) traj.velocities.push_back(v);
    }
    prev_X = st.X;
    prev_V = second ? *st.V : 0.0;
    prev_t = t;
    first_record = false;
    if (!x.allFinite() || (second && !v.allFinite())) {
      std::ostringstream os;
      os << "integrate: non-finite state at t = " << t;
      throw IntegrationError(os.str());
    }
  };

  record(0.0);
  V_initial = prev_V;

  std::vector<double> nodes = schedule.breakpoints(0.0, options.t_end);
  nodes.insert(nodes.begin(), 0.0);
  nodes.push_back(options.t_end);

  long step_index = 0;
  bool done = false;
  for (std::size_t c = 0; c + 1 < nodes.size() && !done; ++c) {
    const double a = nodes[c], b = nodes[c + 1];
    const WeightMatrix w = schedule.sample(a);
    const long nsub = std::max<long>(1, std::lround(std::ceil((b - a) / options.step - 1e-9)));
    const double h = (b - a) / static_cast<double>(nsub);
    for (long s = 0; s < nsub && !done; ++s) {
      const double t = a + h * static_cast<double>(s);
      if (second) {
        const AgentMatrix k1 = laplacian_drift(w, x, v, kernel);
        const AgentMatrix& l1 = v;
        const AgentMatrix xa = x + 0.5 * h * l1, va = v + 0.5 * h * k1;
        const AgentMatrix k2 = laplacian_drift(w, xa, va, kernel);
        const AgentMatrix xb = x + 0.5 * h * va, vb = v + 0.5 * h * k2;
        const AgentMatrix k3 = laplacian_drift(w, xb, vb, kernel);
        const AgentMatrix xc = x + h * vb, vc = v + h * k3;
        const AgentMatrix k4 = laplacian_drift(w, xc, vc, kernel);
        x += h / 6.0 * (l1 + 2.0 * va + 2.0 * vb + vc);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      } else {
        const AgentMatrix k1 = laplacian_drift(w, x, x, kernel);
        const AgentMatrix x1 = x + 0.5 * h * k1;
        const AgentMatrix k2 = laplacian_drift(w, x1, x1, kernel);
        const AgentMatrix x2 = x + 0.5 * h * k2;
        const AgentMatrix k3 = laplacian_drift(w, x2, x2, kernel);
        const AgentMatrix x3 = x + h * k3;
        const AgentMatrix k4 = laplacian_drift(w, x3, x3, kernel);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      ++step_index;
      const bool last = (c + 2 == nodes.size() && s + 1 == nsub);
      if (step_index % options.record_stride == 0 || last) {
        record(s + 1 == nsub ? b : t + h);
        if (second && options.v_floor > 0.0 && prev_V < options.v_floor * V_initial) {
          traj.stopped_early = true;
          done = true;
        }
      }
    }
  }
  return traj;
}

std::optional<double> detect_consensus(const Trajectory& traj, double tol) {
  if (traj.order != SystemOrder::First)
    throw std::invalid_argument("detect_consensus: first-order trajectory required");
  for (int k = 0; k < traj.n_samples(); ++k)
    if (traj.stats[static_cast<std::size_t>(k)].X < tol)
      return traj.times[static_cast<std::size_t>(k)];
  return std::nullopt;
}

FlockingReport detect_flocking(const Trajectory& traj, double v_tol) {
  if (traj.order != SystemOrder::Second)
    throw std::invalid_argument("detect_flocking: second-order trajectory required");
  FlockingReport rep;
  for (int k = 0; k < traj.n_samples(); ++k) {
    const auto& st = traj.stats[static_cast<std::size_t>(k)];
    rep.x_sup = std::max(rep.x_sup, st.X);
    if (!rep.v_time && st.V && *st.V < v_tol) rep.v_time = traj.times[static_cast<std::size_t>(k)];
  }
  return rep;
}

RateFit fit_exponential_rate(const std::vector<double>& times,
                             const std::vector<double>& values) {
  if (times.size() != values.size())
    throw std::invalid_argument("fit_exponential_rate: size mismatch");
  std::vector<double> t, y;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (values[k] > 0.0) {
      t.push_back(times[k]);
      y.push_back(std::log(values[k]));
    }
  if (t.size() < 2)
    throw std::invalid_argument("fit_exponential_rate: fewer than two positive values");
  const double n = static_cast<double>(t.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    tm += t[k];
    ym += y[k];
  }
  tm /= n;
  ym /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    stt += (t[k] - tm) * (t[k] - tm);
    sty += (t[k] - tm) * (y[k] - ym);
    syy += (y[k] - ym) * (y[k] - ym);
  }
  RateFit fit;
  if (stt == 0.0) return fit;
  const double slope = sty / stt;
  fit.rate = -slope;
  fit.r_squared = syy == 0.0 ? 1.0 : (sty * sty) / (stt * syy);
  return fit;
}

}  // namespace flockyap

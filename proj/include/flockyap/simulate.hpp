#ifndef FLOCKYAP_SIMULATE_HPP
#define FLOCKYAP_SIMULATE_HPP

#include <optional>
#include <stdexcept>
#include <vector>

#include "flockyap/ensemble.hpp"
#include "flockyap/kernel.hpp"
#include "flockyap/schedule.hpp"

namespace flockyap {

enum class SystemOrder { First, Second };

// Right-hand sides of the matrix-form systems: first order
// xdot = -L(t,x) x, second order xdot = v, vdot = -L(t,x) v.
AgentMatrix rhs_first_order(double t, const EnsembleState& state,
                            const WeightSchedule& schedule, const Kernel& kernel);
std::pair<AgentMatrix, AgentMatrix> rhs_second_order(double t, const EnsembleState& state,
                                                     const WeightSchedule& schedule,
                                                     const Kernel& kernel);

// Per-sample diagnostics, replayable from the recorded series.
struct StepMonitor {
  double mean_drift = 0.0;       // |mean x - mean x0| (first order); |mean v - mean v0| (second)
  double affine_drift = 0.0;     // |mean x - mean x0 - t mean v0| (second order only)
  double v_monotone_residual = 0.0;  // V(t_k) - V(t_{k-1}), expected <= 0
  double xdot_residual = 0.0;    // (X_k - X_{k-1})/dt - max(V_{k-1}, V_k)
  double radius = 0.0;           // max_i |x_i|
  double min_pair_dist = 0.0;
  double max_pair_dist = 0.0;
  double lap_norm = 0.0;         // ||L(t,x)||_B at this sample
};

struct Trajectory {
  SystemOrder order = SystemOrder::First;
  std::vector<double> times;               // recorded samples, starting at 0
  std::vector<VarianceStats> stats;        // per sample
  std::vector<StepMonitor> monitors;       // per sample
  std::vector<AgentMatrix> positions;      // per sample when states_recorded
  std::vector<AgentMatrix> velocities;     // second order only
  bool states_recorded = true;
  double step = 0.0;                       // nominal integrator step
  bool stopped_early = false;              // v_floor cutoff reached

  int n_samples() const { return static_cast<int>(times.size()); }
  double t_final() const { return times.empty() ? 0.0 : times.back(); }
  EnsembleState state_at(int k) const;
};

struct IntegrateOptions {
  double t_end = 1.0;
  double step = 1e-3;
  int record_stride = 1;    // record every k-th accepted step
  bool record_states = true;
  double v_floor = 0.0;     // stop once V < v_floor * V(0) (second order, 0 = off)
};

struct IntegrationError : std::runtime_error {
  explicit IntegrationError(const std::string& what) : std::runtime_error(what) {}
};

// Classical fourth-order one-step method. Steps are subdivided so that every
// schedule breakpoint is a step boundary; the weight matrix is sampled once
// per mesh cell, so the right-hand side is smooth inside each cell.
Trajectory integrate(SystemOrder order, const AgentMatrix& x0,
                     const std::optional<AgentMatrix>& v0, const WeightSchedule& schedule,
                     const Kernel& kernel, const IntegrateOptions& options);

// Earliest recorded time with X(t) < tol.
std::optional<double> detect_consensus(const Trajectory& traj, double tol);

struct FlockingReport {
  std::optional<double> v_time;  // earliest recorded time with V < v_tol
  double x_sup = 0.0;            // running sup of X over the horizon
};
FlockingReport detect_flocking(const Trajectory& traj, double v_tol);

struct RateFit {
  double rate = 0.0;       // minus the slope of the log-linear fit
  double r_squared = 0.0;
};
// Least squares on (t, log value); non-positive values are filtered out and
// an all-filtered series is an error.
RateFit fit_exponential_rate(const std::vector<double>& times,
                             const std::vector<double>& values);

}  // namespace flockyap

#endif

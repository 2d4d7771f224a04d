#ifndef FLOCKYAP_SCHEDULE_HPP
#define FLOCKYAP_SCHEDULE_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "flockyap/laplacian.hpp"

namespace flockyap {

// Piecewise-constant communication-weight signal xi_ij(t). Values are held on
// half-open cells [k*mesh, (k+1)*mesh); sampling is right-continuous at
// breakpoints. Bernoulli schedules regenerate each cell from a counter-based
// hash of (seed, cell, edge), so sampling is pure and race-free.
class WeightSchedule {
 public:
  enum class Kind { Constant, PiecewisePeriodic, Bernoulli, Table };

  static WeightSchedule constant(WeightMatrix m);
  static WeightSchedule periodic(std::vector<WeightMatrix> slots, double mesh);
  static WeightSchedule bernoulli(WeightMatrix base, double p, double mesh,
                                  std::uint64_t seed, double horizon);
  // Explicit breakpoint table: matrices[k] holds on [t_starts[k], t_starts[k+1]).
  static WeightSchedule table(std::vector<double> t_starts,
                              std::vector<WeightMatrix> matrices, double horizon);

  // Four-agent rotating-link example: mesh tau/6, period tau. Slot 1 activates
  // edge {1,4}, slot 3 edge {3,4}, slot 5 edges {2,3} and {2,4} (1-based
  // agent labels); slots 0, 2, 4 are empty.
  static WeightSchedule example_n4(double tau);

  WeightMatrix sample(double t) const;  // throws beyond a table horizon
  // Discontinuity instants in [t0, t1], sorted, deduplicated, exclusive of
  // the interval endpoints.
  std::vector<double> breakpoints(double t0, double t1) const;

  Kind kind() const { return kind_; }
  int n_agents() const { return n_; }
  double mesh() const { return mesh_; }
  double horizon() const { return horizon_; }  // +inf when unbounded
  double period() const;                       // throws unless periodic/constant
  bool is_periodic() const {
    return kind_ == Kind::Constant || kind_ == Kind::PiecewisePeriodic;
  }

 private:
  WeightSchedule() = default;
  Kind kind_ = Kind::Constant;
  int n_ = 0;
  double mesh_ = 0.0;
  double horizon_ = std::numeric_limits<double>::infinity();
  WeightMatrix constant_{};
  std::vector<WeightMatrix> slots_;
  // bernoulli
  WeightMatrix base_{};
  double p_ = 0.0;
  std::uint64_t seed_ = 0;
  // table
  std::vector<double> t_starts_;
};

// Loads a table schedule from CSV rows (t_start, i, j, weight); weights not
// mentioned in a block are zero; agents are 0-based.
WeightSchedule schedule_from_csv(const std::string& path, int n_agents, double horizon);

// Exact interval-weighted average of L_xi over [t, t+tau] for
// piecewise-constant schedules (fractional end pieces weighted by overlap).
LaplacianOperator window_average_laplacian(const WeightSchedule& schedule, double t,
                                           double tau);

// The averaged weight matrix behind window_average_laplacian.
WeightMatrix window_average_weights(const WeightSchedule& schedule, double t, double tau);

}  // namespace flockyap

#endif

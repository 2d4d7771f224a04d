#ifndef FLOCKYAP_PE_HPP
#define FLOCKYAP_PE_HPP

#include <string>
#include <utility>
#include <vector>

#include "flockyap/schedule.hpp"

namespace flockyap {

struct PeCertificate {
  double tau = 0.0;
  double mu = 0.0;
  LaplacianConvention convention = LaplacianConvention::Normalized;
  bool holds = false;
  double worst_offset = 0.0;
  double worst_lambda2 = 0.0;
  std::string t_grid_spec;
  bool exact = false;  // exhaustive reduction over one period
  double horizon = 0.0;  // window starts checked in [0, horizon - tau]
};

// Certifies B((1/tau) int_t^{t+tau} L_xi, x, x) >= mu B(x,x) by computing the
// algebraic connectivity of the window-averaged Laplacian over window starts.
// Periodic piecewise-constant schedules are checked exhaustively: the map
// t -> averaged Laplacian is piecewise affine and lambda2 is concave on each
// affine segment, so segment endpoints bound the minimum (midpoints are
// evaluated as a safeguard). Other schedules use a uniform offset grid plus
// all breakpoints.
PeCertificate check_pe(const WeightSchedule& schedule, double tau, double mu,
                       double horizon, int offset_samples = 256,
                       LaplacianConvention convention = LaplacianConvention::Normalized);

// For each tau in the grid, the best certifiable constant
// mu*(tau) = inf over window starts of lambda2(averaged Laplacian), in [0,1].
std::vector<std::pair<double, double>> estimate_pe_params(
    const WeightSchedule& schedule, const std::vector<double>& tau_grid, double horizon,
    LaplacianConvention convention = LaplacianConvention::Normalized);

struct SlotAverageReport {
  bool hypothesis_holds = false;
  double min_lambda2 = 0.0;     // over the m-indexed n-slot averages
  double implied_mu = 0.0;      // mu / 2 when the hypothesis holds
  double tau = 0.0;
  int n_slots = 0;
  LaplacianConvention convention = LaplacianConvention::Unnormalized;
  std::string detail;
};

// Verifies the slot-average hypothesis: every n-slot average graph
// xi^m = (1/n) sum_k xi((m+k) tau / n) is connected with lambda2 >= mu.
// When it holds, persistence follows with constant mu/2.
SlotAverageReport check_slot_averages(const WeightSchedule& schedule, double tau, int n_slots,
                           double mu,
                           LaplacianConvention convention = LaplacianConvention::Unnormalized);

}  // namespace flockyap

#endif

#ifndef FLOCKYAP_ENSEMBLE_HPP
#define FLOCKYAP_ENSEMBLE_HPP

#include <Eigen/Dense>
#include <optional>

namespace flockyap {

// Agent tuples in (R^d)^N are stored as N x d matrices, one row per agent.
// Every operation acts column-by-column, so all spectral reasoning happens
// on N x N objects regardless of d.
using AgentMatrix = Eigen::MatrixXd;

// Below this standard deviation a configuration is reported as converged
// instead of dividing by X (or V).
inline constexpr double kVarianceFloor = 1e-15;

struct EnsembleState {
  int n_agents = 0;
  int dim = 0;
  AgentMatrix positions;                  // N x d
  std::optional<AgentMatrix> velocities;  // present iff second-order
  double time = 0.0;

  bool second_order() const { return velocities.has_value(); }
  void validate() const;  // throws std::invalid_argument on malformed state
};

struct VarianceStats {
  double X = 0.0;                 // sqrt(B(x,x))
  std::optional<double> V;        // sqrt(B(v,v)), second-order only
};

// Variance bilinear form B(x,y) = (1/N) sum_i <x_i,y_i> - <mean x, mean y>.
// Evaluated in centered form to stay accurate near the consensus manifold.
double variance_form(const AgentMatrix& x, const AgentMatrix& y);

// Arithmetic mean over agents (1 x d).
Eigen::RowVectorXd mean(const AgentMatrix& x);

// Shift positions (and velocities if present) to zero mean. Leaves every
// variance_form value unchanged.
EnsembleState center(EnsembleState state);

VarianceStats std_devs(const EnsembleState& state);

}  // namespace flockyap

#endif

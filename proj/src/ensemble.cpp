#include "flockyap/ensemble.hpp"

#include <stdexcept>

namespace flockyap {

void EnsembleState::validate() const {
  if (n_agents < 2) throw std::invalid_argument("EnsembleState: need at least 2 agents");
  if (dim < 1) throw std::invalid_argument("EnsembleState: dim must be >= 1");
  if (positions.rows() != n_agents || positions.cols() != dim)
    throw std::invalid_argument("EnsembleState: positions shape mismatch");
  if (!positions.allFinite())
    throw std::invalid_argument("EnsembleState: non-finite position coordinate");
  if (velocities) {
    if (velocities->rows() != n_agents || velocities->cols() != dim)
      throw std::invalid_argument("EnsembleState: velocities shape mismatch");
    if (!velocities->allFinite())
      throw std::invalid_argument("EnsembleState: non-finite velocity coordinate");
  }
  if (time < 0.0) throw std::invalid_argument("EnsembleState: negative time");
}

double variance_form(const AgentMatrix& x, const AgentMatrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw std::invalid_argument("variance_form: dimension mismatch");
  const auto n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const Eigen::RowVectorXd ym = y.colwise().mean();
  return (x.rowwise() - xm).cwiseProduct(y.rowwise() - ym).sum() / n;
}

Eigen::RowVectorXd mean(const AgentMatrix& x) { return x.colwise().mean(); }

EnsembleState center(EnsembleState state) {
  state.positions.rowwise() -= mean(state.positions);
  if (state.velocities) state.velocities->rowwise() -= mean(*state.velocities);
  return state;
}

VarianceStats std_devs(const EnsembleState& state) {
  VarianceStats out;
  out.X = std::sqrt(std::max(0.0, variance_form(state.positions, state.positions)));
  if (state.velocities)
    out.V = std::sqrt(std::max(0.0, variance_form(*state.velocities, *state.velocities)));
  return out;
}

}  // namespace flockyap

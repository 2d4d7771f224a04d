#include "flockyap/laplacian.hpp"

#include <stdexcept>

namespace flockyap {

namespace {

void require_symmetric(const Eigen::MatrixXd& m, const char* who) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(who) + ": matrix not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument(std::string(who) + ": matrix not symmetric");
}

}  // namespace

void WeightMatrix::validate() const {
  require_symmetric(entries, "WeightMatrix");
  const int N = n();
  for (int i = 0; i < N; ++i) {
    if (entries(i, i) != 0.0)
      throw std::invalid_argument("WeightMatrix: diagonal must be zero");
    for (int j = 0; j < N; ++j)
      if (entries(i, j) < 0.0 || entries(i, j) > 1.0)
        throw std::invalid_argument("WeightMatrix: entries must lie in [0,1]");
  }
}

WeightMatrix WeightMatrix::complete(int n) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(n, n);
  m.diagonal().setZero();
  return {m};
}

LaplacianOperator laplacian_from_weights(const WeightMatrix& w) {
  require_symmetric(w.entries, "laplacian_from_weights");
  const int N = w.n();
  Eigen::MatrixXd m = -w.entries;
  m.diagonal() = w.entries.rowwise().sum();
  m /= static_cast<double>(N);
  return {std::move(m)};
}

WeightMatrix kernel_weights(const WeightMatrix& w, const AgentMatrix& positions,
                            const Kernel& kernel) {
  const int N = w.n();
  if (positions.rows() != N)
    throw std::invalid_argument("kernel_weights: positions/weights size mismatch");
  Eigen::MatrixXd eff = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      if (w.entries(i, j) == 0.0) continue;
      const double r = (positions.row(i) - positions.row(j)).norm();
      eff(i, j) = eff(j, i) = w.entries(i, j) * kernel(r);
    }
  return {std::move(eff)};
}

LaplacianOperator state_laplacian(const WeightMatrix& w, const AgentMatrix& positions,
                                  const Kernel& kernel) {
  return laplacian_from_weights(kernel_weights(w, positions, kernel));
}

AgentMatrix apply(const LaplacianOperator& L, const AgentMatrix& y) {
  if (y.rows() != L.n()) throw std::invalid_argument("apply: dimension mismatch");
  return L.m * y;
}

double quadratic_form(const LaplacianOperator& L, const AgentMatrix& y) {
  return variance_form(apply(L, y), y);
}

double algebraic_connectivity(const LaplacianOperator& L, LaplacianConvention convention) {
  require_symmetric(L.m, "algebraic_connectivity");
  const int N = L.n();
  Eigen::MatrixXd a = L.m;
  if (convention == LaplacianConvention::Unnormalized) a *= static_cast<double>(N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();  // ascending
  const double lam_max = ev(N - 1);
  const double zero_thr = 1e-12 * std::max(lam_max, 1e-12);
  // ev(0) is the all-ones kernel direction; any further near-zero eigenvalue
  // means the graph is disconnected.
  const double lam2 = N >= 2 ? ev(1) : 0.0;
  return lam2 > zero_thr ? lam2 : 0.0;
}

double b_operator_norm(const LaplacianOperator& L) {
  require_symmetric(L.m, "b_operator_norm");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.m, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()(L.n() - 1));
}

LaplacianOperator union_laplacian(const LaplacianOperator& a, const LaplacianOperator& b) {
  if (a.n() != b.n()) throw std::invalid_argument("union_laplacian: size mismatch");
  return {a.m + b.m};
}

}  // namespace flockyap

#ifndef FLOCKYAP_LAPLACIAN_HPP
#define FLOCKYAP_LAPLACIAN_HPP

#include <Eigen/Dense>

#include "flockyap/ensemble.hpp"
#include "flockyap/kernel.hpp"

namespace flockyap {

// Symmetric communication rates xi_ij in [0,1] with zero diagonal.
struct WeightMatrix {
  Eigen::MatrixXd entries;  // N x N

  int n() const { return static_cast<int>(entries.rows()); }
  void validate() const;  // throws std::invalid_argument
  static WeightMatrix zero(int n) { return {Eigen::MatrixXd::Zero(n, n)}; }
  static WeightMatrix complete(int n);
};

// The paper's matrices carry the 1/N prefactor; spectra quoted without it use
// the Unnormalized convention (N times the stored matrix).
enum class LaplacianConvention { Normalized, Unnormalized };

// N x N symmetric operator with zero row sums acting blockwise on (R^d)^N.
// Stored in the Normalized convention.
struct LaplacianOperator {
  Eigen::MatrixXd m;
  int n() const { return static_cast<int>(m.rows()); }
};

// (L_xi y)_i = (1/N) sum_j xi_ij (y_i - y_j).
LaplacianOperator laplacian_from_weights(const WeightMatrix& w);

// (L(t,x) y)_i = (1/N) sum_j xi_ij phi(|x_i - x_j|) (y_i - y_j).
LaplacianOperator state_laplacian(const WeightMatrix& w, const AgentMatrix& positions,
                                  const Kernel& kernel);

// Effective weight matrix xi_ij phi(|x_i - x_j|) behind state_laplacian.
WeightMatrix kernel_weights(const WeightMatrix& w, const AgentMatrix& positions,
                            const Kernel& kernel);

// Blockwise action; the result has zero mean.
AgentMatrix apply(const LaplacianOperator& L, const AgentMatrix& y);

// B(L y, y); equals the pairwise sum (1/2N^2) sum_ij w_ij |y_i - y_j|^2.
double quadratic_form(const LaplacianOperator& L, const AgentMatrix& y);

// Second-smallest eigenvalue in the requested convention; 0 for disconnected
// graphs. Eigenvalues below 1e-12 * max(lambda_max, 1e-12) count as zero.
double algebraic_connectivity(const LaplacianOperator& L,
                              LaplacianConvention convention = LaplacianConvention::Normalized);

// Operator norm with respect to B = largest eigenvalue of the normalized
// matrix (the all-ones direction carries eigenvalue zero).
double b_operator_norm(const LaplacianOperator& L);

LaplacianOperator union_laplacian(const LaplacianOperator& a, const LaplacianOperator& b);

}  // namespace flockyap

#endif

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dppmle/kernel.hpp"
#include "dppmle/sampling.hpp"

namespace dppmle {

// N x N matrix of partial derivatives of the scaled log-likelihood.
using GradientMatrix = Eigen::MatrixXd;

// N^2 x N^2 second-derivative matrix. Row (i, j) and column (k, l) live at
// i * N + j and k * N + l, the row-major order of the vectorized kernel.
using HessianMatrix = Eigen::MatrixXd;

// Immutable weighting of subsets: an empirical table from data or the exact
// table of a true kernel.
class LikelihoodContext {
 public:
  explicit LikelihoodContext(DistributionTable dist);

  const DistributionTable& dist() const { return dist_; }
  int ground_size() const { return dist_.ground_size(); }
  // Masks with positive weight, ascending. Zero-weight subsets never enter a
  // sum, so kernels singular there stay evaluable.
  const std::vector<Mask>& support() const { return support_; }

 private:
  DistributionTable dist_;
  std::vector<Mask> support_;
};

DistributionTable empirical_distribution(const SampleBatch& batch);

// sum_J p(J) log det(L_J) - log det(L + I). Returns -infinity when a
// supported minor has a nonpositive determinant.
double log_likelihood(const LikelihoodContext& ctx, const Eigen::MatrixXd& l);
double log_likelihood(const LikelihoodContext& ctx, const KernelMatrix& l);

// sum_J p(J) [L_J^{-1}]_padded - (L + I)^{-1}; the empty set contributes
// nothing. Throws SingularPrincipalMinor naming the first singular minor.
GradientMatrix gradient(const LikelihoodContext& ctx, const Eigen::MatrixXd& l);
GradientMatrix gradient(const LikelihoodContext& ctx, const KernelMatrix& l);

// Entry (ij, kl) = -sum_J p(J) A_ki A_jl [i,j,k,l in J] + B_ki B_jl with
// A = [L_J^{-1}]_padded and B = (L + I)^{-1}.
HessianMatrix hessian(const LikelihoodContext& ctx, const Eigen::MatrixXd& l);
HessianMatrix hessian(const LikelihoodContext& ctx, const KernelMatrix& l);

// Phi(L*) - Phi(L) for a context built from the exact table of L*. Uses
// Phi(L*) = sum_J p*(J) log p*(J).
double kl_gap(const LikelihoodContext& ctx_star, const Eigen::MatrixXd& l);
double kl_gap(const LikelihoodContext& ctx_star, const KernelMatrix& l);

// Linear map from the N(N+1)/2 upper-triangle coordinates (row-major,
// i <= j) to the N^2 pair-index vector of the symmetric kernel.
Eigen::MatrixXd symmetric_chart_jacobian(int n);
Eigen::VectorXd to_symmetric_coords(const Eigen::MatrixXd& m);
Eigen::MatrixXd from_symmetric_coords(const Eigen::VectorXd& theta, int n);

// Two-by-two kernels in the (a, b, c) chart, L = [[a, b], [b, c]]:
//   p1 log a + p2 log c + p3 log(ac - b^2) - log((a+1)(c+1) - b^2).
namespace abc {

double log_likelihood(const DistributionTable& table, const Eigen::Vector3d& x);
Eigen::Vector3d gradient(const DistributionTable& table,
                         const Eigen::Vector3d& x);
Eigen::Matrix3d hessian(const DistributionTable& table,
                        const Eigen::Vector3d& x);
// Columns map da, db, dc to the pair-index vector (L11, L12, L21, L22).
Eigen::Matrix<double, 4, 3> chart_jacobian();

}  // namespace abc

}  // namespace dppmle

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dppmle/closed_form.hpp"
#include "dppmle/kernel.hpp"
#include "dppmle/optimize.hpp"
#include "dppmle/sampling.hpp"

namespace dppmle {

using CovarianceMatrix = Eigen::MatrixXd;

// True when the graph on items with an edge for every nonzero off-diagonal
// entry is connected, i.e. the kernel cannot be permuted to block-diagonal.
bool is_irreducible(const Eigen::MatrixXd& kernel);

// Asymptotic covariance of sqrt(n) (L~_n - L*) in the N^2 pair-index chart.
// The pair-index Hessian of Phi annihilates antisymmetric directions, so the
// inverse is taken on the symmetric subspace: with J the chart Jacobian of the
// upper-triangle coordinates, the result is -J (J^T H J)^{-1} J^T.
// Throws ReducibleKernel or SingularHessian.
CovarianceMatrix asymptotic_covariance(const KernelMatrix& truth);

// The same covariance in upper-triangle coordinates (N(N+1)/2 square).
CovarianceMatrix asymptotic_covariance_symmetric(const KernelMatrix& truth);

// Closed-form delta-method covariance of sqrt(n) ((a^,b^,c^) - (a,b,c)).
// Throws ZeroB when b <= 0.
Eigen::Matrix3d covariance_2x2_explicit(const TwoByTwoParams& params);

// Symmetric inverse square root through an eigendecomposition, eigenvalues
// floored at `floor`.
Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& m, double floor = 1e-12);

double standard_normal_cdf(double x);

// sup_x |F_n(x) - Phi(x)| for the empirical distribution of `values`.
double kolmogorov_distance_normal(std::vector<double> values);

enum class EstimatorKind { automatic, closed_form_2x2, block, newton };

struct CltOptions {
  std::size_t n = 10000;
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::enumeration;
  EstimatorKind estimator = EstimatorKind::automatic;
  // Newton start; the truth when unset.
  std::optional<Eigen::MatrixXd> newton_start;
  NewtonOptions newton;
};

struct CltReport {
  // Sample covariance and mean of sqrt(n) * upper-triangle coordinates of
  // (D L^ D - L*), D the sign diagonal nearest the truth.
  CovarianceMatrix covariance;
  Eigen::VectorXd mean;
  std::size_t reps = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  // Estimates whose marginal-kernel eigenvalues leave (0.05, 0.95).
  std::size_t outside_band = 0;
  // Fewer than two successful replications: covariance is all zeros.
  bool degenerate = false;
  // Per-replication aligned ell-distances, in replication order.
  std::vector<double> ell_distances;
};

// One aligned estimate from a batch, or nullopt when the estimator fails.
std::optional<Eigen::MatrixXd> estimate_kernel(const SampleBatch& batch,
                                               const KernelMatrix& truth,
                                               const CltOptions& options);

CltReport clt_experiment(const KernelMatrix& truth, const CltOptions& options);

struct RateReport {
  std::vector<std::size_t> sample_sizes;
  std::vector<double> kolmogorov_distances;
  std::vector<double> component_distances;  // max over scalar components
  std::vector<double> grid_distances;       // max over the rectangle grid
  std::vector<std::size_t> failures;
  std::vector<std::size_t> outside_band;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};

// Kolmogorov distance between (-V)^{-1/2} sqrt(n) ((a^,b^,c^) - (a,b,c)) and
// N(0, I_3), measured as the larger of the per-component KS distances and the
// largest error over the 27 rectangles {z < x}, x in {-1, 0, 1}^3.
RateReport berry_esseen_experiment(const TwoByTwoParams& truth,
                                   const std::vector<std::size_t>& sizes,
                                   std::size_t reps, std::uint64_t seed,
                                   SamplerKind sampler = SamplerKind::enumeration);

// Header `n,ks_distance,reps,seed`.
void write_rate_csv(std::ostream& out, const RateReport& report);

}  // namespace dppmle

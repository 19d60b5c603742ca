#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dppmle/kernel.hpp"
#include "dppmle/sampling.hpp"

namespace dppmle {

// L = [[a, b], [b, c]] with a, c > 0, b >= 0 and ac - b^2 >= 0.
struct TwoByTwoParams {
  double a = 1.0;
  double b = 0.0;
  double c = 1.0;

  Eigen::Matrix2d matrix() const;
  Eigen::Vector3d vector() const { return {a, b, c}; }
  static TwoByTwoParams from_matrix(const Eigen::MatrixXd& m);
};

enum class TwoByTwoBranch { interior, boundary_b0 };

struct TwoByTwoEstimate {
  TwoByTwoParams params;
  TwoByTwoBranch branch = TwoByTwoBranch::interior;
};

// Disjoint pairs (first, second) covering {0, ..., 2k-1}.
class BlockStructure {
 public:
  explicit BlockStructure(std::vector<std::pair<int, int>> blocks);
  // Pairs (0,1), (2,3), ... for a ground set of size n.
  static BlockStructure consecutive(int n);

  const std::vector<std::pair<int, int>>& blocks() const { return blocks_; }
  int ground_size() const { return static_cast<int>(blocks_.size()) * 2; }

 private:
  std::vector<std::pair<int, int>> blocks_;
};

inline constexpr double kDiscriminantClamp = 1e-12;

// p0 = 1 / ((a+1)(c+1) - b^2), p1 = a p0, p2 = c p0, p3 = (ac - b^2) p0.
DistributionTable forward_probs_2x2(const TwoByTwoParams& params);

// Closed-form maximizer of the two-item likelihood. When
// p1 p2 - p0 p3 >= 0 (after clamping values within kDiscriminantClamp of
// zero) returns (p1/p0, sqrt(p1 p2 - p0 p3)/p0, p2/p0); otherwise returns the
// b = 0 critical point ((p1+p3)/(p0+p2), 0, (p2+p3)/(p0+p1)).
TwoByTwoEstimate mle_2x2(const DistributionTable& table);

// Per-block two-item tables from membership of each pair in every draw.
std::vector<DistributionTable> block_tables(const SampleBatch& batch,
                                            const BlockStructure& structure);

// Block-diagonal kernel assembled from mle_2x2 on each block's table.
// DegenerateTable::block() names the failing block.
Eigen::MatrixXd mle_block(const SampleBatch& batch,
                          const BlockStructure& structure);

struct MomentsEstimate {
  Eigen::VectorXd diagonal;
  Eigen::MatrixXd offdiag_magnitudes;  // zero diagonal, symmetric
};

// L_ii = p_i / p_0 and |L_ij| = sqrt(p_i p_j - p_0 p_ij) / p_0 from singleton
// and pair probabilities; negative discriminants are clamped to zero.
MomentsEstimate moments_estimator(const DistributionTable& table);

}  // namespace dppmle

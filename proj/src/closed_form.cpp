#include "dppmle/closed_form.hpp"

#include <array>
#include <cmath>

#include "dppmle/error.hpp"

namespace dppmle {

Eigen::Matrix2d TwoByTwoParams::matrix() const {
  Eigen::Matrix2d m;
  m << a, b, b, c;
  return m;
}

TwoByTwoParams TwoByTwoParams::from_matrix(const Eigen::MatrixXd& m) {
  if (m.rows() != 2 || m.cols() != 2) {
    throw InvalidArgument("expected a 2 x 2 kernel");
  }
  return {m(0, 0), std::abs(m(0, 1)), m(1, 1)};
}

BlockStructure::BlockStructure(std::vector<std::pair<int, int>> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw InvalidArgument("block structure is empty");
  const int n = ground_size();
  std::vector<bool> seen(n, false);
  for (auto [i, j] : blocks_) {
    for (int v : {i, j}) {
      if (v < 0 || v >= n || seen[v]) {
        throw InvalidArgument("blocks must partition {0, ..., 2k-1}");
      }
      seen[v] = true;
    }
  }
}

BlockStructure BlockStructure::consecutive(int n) {
  if (n <= 0 || n % 2 != 0) {
    throw InvalidArgument("consecutive blocks need an even ground set");
  }
  std::vector<std::pair<int, int>> blocks;
  for (int i = 0; i < n; i += 2) blocks.emplace_back(i, i + 1);
  return BlockStructure(std::move(blocks));
}

DistributionTable forward_probs_2x2(const TwoByTwoParams& p) {
  if (!(p.a > 0.0) || !(p.c > 0.0) || p.b < 0.0) {
    throw InvalidArgument("need a > 0, c > 0, b >= 0");
  }
  double det = p.a * p.c - p.b * p.b;
  if (det < -kDiscriminantClamp) {
    throw InvalidArgument("need ac - b^2 >= 0");
  }
  det = std::max(det, 0.0);
  const double p0 = 1.0 / ((p.a + 1.0) * (p.c + 1.0) - p.b * p.b);
  return DistributionTable(2, {p0, p.a * p0, p.c * p0, det * p0});
}

TwoByTwoEstimate mle_2x2(const DistributionTable& table) {
  if (table.ground_size() != 2) {
    throw InvalidArgument("mle_2x2 needs a two-item table");
  }
  const double p0 = table[0], p1 = table[1], p2 = table[2], p3 = table[3];
  double disc = p1 * p2 - p0 * p3;
  if (disc < 0.0 && disc >= -kDiscriminantClamp) disc = 0.0;

  if (disc >= 0.0) {
    if (!(p0 > 0.0)) {
      throw DegenerateTable("empty-set probability is zero");
    }
    return {{p1 / p0, std::sqrt(disc) / p0, p2 / p0},
            TwoByTwoBranch::interior};
  }
  if (!(p0 + p2 > 0.0) || !(p0 + p1 > 0.0)) {
    throw DegenerateTable("b = 0 critical point undefined");
  }
  return {{(p1 + p3) / (p0 + p2), 0.0, (p2 + p3) / (p0 + p1)},
          TwoByTwoBranch::boundary_b0};
}

std::vector<DistributionTable> block_tables(const SampleBatch& batch,
                                            const BlockStructure& structure) {
  if (batch.draws.empty()) throw EmptyBatch("block estimate of empty batch");
  if (structure.ground_size() != batch.n_ground) {
    throw InvalidArgument("block structure does not cover the ground set");
  }
  const double n = static_cast<double>(batch.size());
  std::vector<DistributionTable> tables;
  for (auto [first, second] : structure.blocks()) {
    std::array<std::size_t, 4> counts{};
    for (Mask m : batch.draws) {
      const unsigned in1 = (m >> first) & 1u;
      const unsigned in2 = (m >> second) & 1u;
      ++counts[in1 | (in2 << 1)];
    }
    tables.emplace_back(2, std::vector<double>{counts[0] / n, counts[1] / n,
                                               counts[2] / n, counts[3] / n});
  }
  return tables;
}

Eigen::MatrixXd mle_block(const SampleBatch& batch,
                          const BlockStructure& structure) {
  const auto tables = block_tables(batch, structure);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(batch.n_ground, batch.n_ground);
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const auto [first, second] = structure.blocks()[k];
    // A block whose items never appear carries no information about it.
    if (tables[k][0] == 1.0) {
      throw DegenerateTable(
          "block " + std::to_string(k) + " items never appear", static_cast<int>(k));
    }
    TwoByTwoEstimate est;
    try {
      est = mle_2x2(tables[k]);
    } catch (const DegenerateTable& e) {
      throw DegenerateTable("block " + std::to_string(k) + ": " + e.what(),
                            static_cast<int>(k));
    }
    l(first, first) = est.params.a;
    l(second, second) = est.params.c;
    l(first, second) = l(second, first) = est.params.b;
  }
  return l;
}

MomentsEstimate moments_estimator(const DistributionTable& table) {
  const int n = table.ground_size();
  const double p0 = table[0];
  if (!(p0 > 0.0)) throw DegenerateTable("empty-set probability is zero");
  MomentsEstimate out{Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n)};
  for (int i = 0; i < n; ++i) out.diagonal(i) = table[Mask{1} << i] / p0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double pi = table[Mask{1} << i];
      const double pj = table[Mask{1} << j];
      const double pij = table[(Mask{1} << i) | (Mask{1} << j)];
      const double disc = std::max(0.0, pi * pj - p0 * pij);
      out.offdiag_magnitudes(i, j) = out.offdiag_magnitudes(j, i) =
          std::sqrt(disc) / p0;
    }
  }
  return out;
}

}  // namespace dppmle

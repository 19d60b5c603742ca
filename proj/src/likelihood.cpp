#include "dppmle/likelihood.hpp"

#include <cmath>
#include <limits>

#include "dppmle/error.hpp"

namespace dppmle {

namespace {

void check_shape(const LikelihoodContext& ctx, const Eigen::MatrixXd& l) {
  if (l.rows() != ctx.ground_size() || l.cols() != ctx.ground_size()) {
    throw InvalidArgument("kernel size does not match the context");
  }
}

Eigen::MatrixXd shifted_inverse(const Eigen::MatrixXd& l) {
  const Eigen::MatrixXd shifted =
      l + Eigen::MatrixXd::Identity(l.rows(), l.cols());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(shifted);
  if (!lu.isInvertible()) {
    throw SingularPrincipalMinor("L + I is singular", 0);
  }
  return lu.inverse();
}

// Padded inverse of the principal minor on `mask`.
Eigen::MatrixXd padded_minor_inverse(const Eigen::MatrixXd& l, Mask mask) {
  const int n = static_cast<int>(l.rows());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(principal_submatrix(l, mask));
  if (!lu.isInvertible()) {
    throw SingularPrincipalMinor(
        "principal minor on subset mask " + std::to_string(mask) +
            " is singular",
        mask);
  }
  return embed_principal(lu.inverse(), mask, n);
}

}  // namespace

LikelihoodContext::LikelihoodContext(DistributionTable dist)
    : dist_(std::move(dist)) {
  for (Mask m = 0; m < dist_.size(); ++m) {
    if (dist_[m] > 0.0) support_.push_back(m);
  }
}

DistributionTable empirical_distribution(const SampleBatch& batch) {
  if (batch.draws.empty()) throw EmptyBatch("empirical table of empty batch");
  if (batch.n_ground > kMaxEnumerable) {
    throw GroundSetTooLarge("empirical tables support n <= 20");
  }
  std::vector<std::size_t> counts(std::size_t{1} << batch.n_ground, 0);
  for (Mask m : batch.draws) ++counts.at(m);
  const double n = static_cast<double>(batch.size());
  std::vector<double> probs(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    probs[i] = static_cast<double>(counts[i]) / n;
  }
  return DistributionTable(batch.n_ground, std::move(probs));
}

double log_likelihood(const LikelihoodContext& ctx, const Eigen::MatrixXd& l) {
  check_shape(ctx, l);
  constexpr double kMinusInf = -std::numeric_limits<double>::infinity();
  double value = 0.0;
  for (Mask m : ctx.support()) {
    if (m == 0) continue;
    const double det = principal_minor_det(l, m);
    if (!(det > 0.0)) return kMinusInf;
    value += ctx.dist()[m] * std::log(det);
  }
  const double norm =
      (l + Eigen::MatrixXd::Identity(l.rows(), l.cols())).partialPivLu().determinant();
  if (!(norm > 0.0)) return kMinusInf;
  return value - std::log(norm);
}

double log_likelihood(const LikelihoodContext& ctx, const KernelMatrix& l) {
  return log_likelihood(ctx, l.matrix());
}

GradientMatrix gradient(const LikelihoodContext& ctx, const Eigen::MatrixXd& l) {
  check_shape(ctx, l);
  GradientMatrix g = -shifted_inverse(l);
  for (Mask m : ctx.support()) {
    if (m == 0) continue;
    g += ctx.dist()[m] * padded_minor_inverse(l, m);
  }
  return 0.5 * (g + g.transpose());
}

GradientMatrix gradient(const LikelihoodContext& ctx, const KernelMatrix& l) {
  return gradient(ctx, l.matrix());
}

HessianMatrix hessian(const LikelihoodContext& ctx, const Eigen::MatrixXd& l) {
  check_shape(ctx, l);
  const int n = ctx.ground_size();
  const Eigen::MatrixXd b = shifted_inverse(l);
  HessianMatrix h(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int q = 0; q < n; ++q) h(i * n + j, k * n + q) = b(k, i) * b(j, q);

  for (Mask m : ctx.support()) {
    if (m == 0) continue;
    const Eigen::MatrixXd a = padded_minor_inverse(l, m);
    const double w = ctx.dist()[m];
    const std::vector<int> idx = Subset(m, n).items();
    for (int i : idx)
      for (int j : idx)
        for (int k : idx)
          for (int q : idx) h(i * n + j, k * n + q) -= w * a(k, i) * a(j, q);
  }
  return h;
}

HessianMatrix hessian(const LikelihoodContext& ctx, const KernelMatrix& l) {
  return hessian(ctx, l.matrix());
}

double kl_gap(const LikelihoodContext& ctx_star, const Eigen::MatrixXd& l) {
  double best = 0.0;
  for (Mask m : ctx_star.support()) {
    const double p = ctx_star.dist()[m];
    best += p * std::log(p);
  }
  return best - log_likelihood(ctx_star, l);
}

double kl_gap(const LikelihoodContext& ctx_star, const KernelMatrix& l) {
  return kl_gap(ctx_star, l.matrix());
}

Eigen::MatrixXd symmetric_chart_jacobian(int n) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n * n, n * (n + 1) / 2);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++col) {
      jac(i * n + j, col) = 1.0;
      jac(j * n + i, col) = 1.0;
    }
  }
  return jac;
}

Eigen::VectorXd to_symmetric_coords(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd theta(n * (n + 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) theta(k++) = m(i, j);
  return theta;
}

Eigen::MatrixXd from_symmetric_coords(const Eigen::VectorXd& theta, int n) {
  if (theta.size() != n * (n + 1) / 2) {
    throw InvalidArgument("coordinate vector has the wrong length");
  }
  Eigen::MatrixXd m(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++k) {
      m(i, j) = theta(k);
      m(j, i) = theta(k);
    }
  }
  return m;
}

namespace abc {

namespace {

struct Terms {
  double p1, p2, p3;
  double a, b, c;
  double det;    // ac - b^2
  double norm;   // (a+1)(c+1) - b^2
};

Terms terms(const DistributionTable& table, const Eigen::Vector3d& x) {
  if (table.ground_size() != 2) {
    throw InvalidArgument("(a, b, c) chart needs a two-item table");
  }
  const double a = x(0), b = x(1), c = x(2);
  return {table[1], table[2], table[3], a, b, c,
          a * c - b * b, (a + 1) * (c + 1) - b * b};
}

}  // namespace

double log_likelihood(const DistributionTable& table,
                      const Eigen::Vector3d& x) {
  const Terms t = terms(table, x);
  constexpr double kMinusInf = -std::numeric_limits<double>::infinity();
  double v = -std::log(t.norm);
  if (t.p1 > 0) {
    if (!(t.a > 0)) return kMinusInf;
    v += t.p1 * std::log(t.a);
  }
  if (t.p2 > 0) {
    if (!(t.c > 0)) return kMinusInf;
    v += t.p2 * std::log(t.c);
  }
  if (t.p3 > 0) {
    if (!(t.det > 0)) return kMinusInf;
    v += t.p3 * std::log(t.det);
  }
  return v;
}

Eigen::Vector3d gradient(const DistributionTable& table,
                         const Eigen::Vector3d& x) {
  const Terms t = terms(table, x);
  const double q3 = t.p3 > 0 ? t.p3 / t.det : 0.0;
  Eigen::Vector3d g;
  g(0) = (t.p1 > 0 ? t.p1 / t.a : 0.0) + q3 * t.c - (t.c + 1) / t.norm;
  g(1) = -2.0 * t.b * q3 + 2.0 * t.b / t.norm;
  g(2) = (t.p2 > 0 ? t.p2 / t.c : 0.0) + q3 * t.a - (t.a + 1) / t.norm;
  return g;
}

Eigen::Matrix3d hessian(const DistributionTable& table,
                        const Eigen::Vector3d& x) {
  const Terms t = terms(table, x);
  const double d2 = t.p3 > 0 ? t.p3 / (t.det * t.det) : 0.0;
  const double e2 = 1.0 / (t.norm * t.norm);
  const double b = t.b;
  Eigen::Matrix3d h;
  h(0, 0) = (t.p1 > 0 ? -t.p1 / (t.a * t.a) : 0.0) - d2 * t.c * t.c +
            e2 * (t.c + 1) * (t.c + 1);
  h(2, 2) = (t.p2 > 0 ? -t.p2 / (t.c * t.c) : 0.0) - d2 * t.a * t.a +
            e2 * (t.a + 1) * (t.a + 1);
  h(1, 1) = -2.0 * d2 * (t.det + 2 * b * b) + 2.0 * e2 * (t.norm + 2 * b * b);
  h(0, 1) = h(1, 0) = 2 * b * d2 * t.c - 2 * b * e2 * (t.c + 1);
  h(2, 1) = h(1, 2) = 2 * b * d2 * t.a - 2 * b * e2 * (t.a + 1);
  h(0, 2) = h(2, 0) = -d2 * b * b + e2 * b * b;
  return h;
}

Eigen::Matrix<double, 4, 3> chart_jacobian() {
  Eigen::Matrix<double, 4, 3> j = Eigen::Matrix<double, 4, 3>::Zero();
  j(0, 0) = 1.0;
  j(1, 1) = 1.0;
  j(2, 1) = 1.0;
  j(3, 2) = 1.0;
  return j;
}

}  // namespace abc

}  // namespace dppmle

#include "dppmle/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dppmle/error.hpp"

namespace dppmle {

std::string to_string(KernelKind kind) {
  return kind == KernelKind::ensemble ? "ensemble" : "marginal";
}

Subset::Subset(Mask m, int ground) : mask(m), n(ground) {
  if (ground < 0 || ground > 63) {
    throw InvalidArgument("ground set size must be in [0, 63]");
  }
  if (ground < 64 && (m >> ground) != 0) {
    throw InvalidArgument("subset mask exceeds the ground set");
  }
}

Subset Subset::from_items(const std::vector<int>& items, int ground) {
  Mask m = 0;
  for (int i : items) {
    if (i < 0 || i >= ground) {
      throw InvalidArgument("item " + std::to_string(i) +
                            " outside the ground set");
    }
    m |= Mask{1} << i;
  }
  return Subset(m, ground);
}

int Subset::cardinality() const { return std::popcount(mask); }

std::vector<int> Subset::items() const {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

Subset Subset::complement() const {
  const Mask full = n == 0 ? 0 : (~Mask{0} >> (64 - n));
  return Subset(full & ~mask, n);
}

DistributionTable::DistributionTable(int n, std::vector<double> probs,
                                     double tol)
    : n_(n), probs_(std::move(probs)) {
  if (n < 0 || n > kMaxEnumerable) {
    throw GroundSetTooLarge("distribution tables support n <= " +
                            std::to_string(kMaxEnumerable));
  }
  if (probs_.size() != (std::size_t{1} << n)) {
    throw InvalidArgument("table length must be 2^n");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw InvalidArgument("negative table entry");
    total += p;
  }
  if (std::abs(total - 1.0) > tol) {
    std::ostringstream msg;
    msg << "table sums to " << std::setprecision(17) << total;
    throw InvalidArgument(msg.str());
  }
}

Eigen::MatrixXd SignDiagonal::matrix() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = sign(i);
  return d;
}

Eigen::MatrixXd SignDiagonal::conjugate(const Eigen::MatrixXd& m) const {
  Eigen::MatrixXd out = m;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) *= sign(i) * sign(j);
  }
  return out;
}

KernelMatrix validate_kernel(const Eigen::MatrixXd& entries, KernelKind kind,
                             double tol_psd) {
  if (entries.rows() != entries.cols() || entries.rows() == 0) {
    throw InvalidArgument("kernel must be a non-empty square matrix");
  }
  if (!entries.allFinite()) throw InvalidArgument("kernel has non-finite entries");
  const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetrizeTol) {
    std::ostringstream msg;
    msg << "kernel asymmetry " << asym << " exceeds " << kSymmetrizeTol;
    throw NotSymmetric(msg.str());
  }
  Eigen::MatrixXd sym = 0.5 * (entries + entries.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym,
                                                     Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw EigendecompositionFailure("kernel eigendecomposition failed");
  }
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  const double tol = tol_psd * scale;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double l = lambda(i);
    const bool low = l < -tol;
    const bool high = kind == KernelKind::marginal && l > 1.0 + tol;
    if (low || high) {
      std::ostringstream msg;
      msg << to_string(kind) << " kernel has eigenvalue "
          << std::setprecision(12) << l << " outside "
          << (kind == KernelKind::marginal ? "[0, 1]" : "[0, inf)");
      throw EigenvalueOutOfRange(msg.str(), l);
    }
  }
  return KernelMatrix(std::move(sym), kind);
}

KernelMatrix marginal_of(const KernelMatrix& ensemble) {
  if (ensemble.kind() != KernelKind::ensemble) {
    throw InvalidArgument("marginal_of expects an ensemble kernel");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ensemble.matrix());
  if (eig.info() != Eigen::Success) {
    throw EigendecompositionFailure("kernel eigendecomposition failed");
  }
  Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  Eigen::VectorXd ratio = lambda.array() / (1.0 + lambda.array());
  Eigen::MatrixXd k = eig.eigenvectors() * ratio.asDiagonal() *
                      eig.eigenvectors().transpose();
  k = 0.5 * (k + k.transpose()).eval();
  return KernelMatrix(std::move(k), KernelKind::marginal);
}

Eigen::MatrixXd principal_submatrix(const Eigen::MatrixXd& m, Mask mask) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> idx;
  for (int i = 0; i < n; ++i) {
    if ((mask >> i) & 1u) idx.push_back(i);
  }
  const int k = static_cast<int>(idx.size());
  Eigen::MatrixXd sub(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) sub(a, b) = m(idx[a], idx[b]);
  }
  return sub;
}

Eigen::MatrixXd embed_principal(const Eigen::MatrixXd& block, Mask mask,
                                int n) {
  std::vector<int> idx;
  for (int i = 0; i < n; ++i) {
    if ((mask >> i) & 1u) idx.push_back(i);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const int k = static_cast<int>(idx.size());
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) out(idx[a], idx[b]) = block(a, b);
  }
  return out;
}

double principal_minor_det(const Eigen::MatrixXd& m, Mask mask) {
  if (mask == 0) return 1.0;
  const Eigen::MatrixXd sub = principal_submatrix(m, mask);
  if (sub.rows() == 1) return sub(0, 0);
  return sub.partialPivLu().determinant();
}

namespace {

// log|det(M)| and its sign from a pivoted LU factorization.
std::pair<double, int> signed_log_det(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return {0.0, 1};
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  const auto& u = lu.matrixLU();
  double log_abs = 0.0;
  int sign = lu.permutationP().determinant() * lu.permutationQ().determinant();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double d = u(i, i);
    if (d == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
    if (d < 0) sign = -sign;
    log_abs += std::log(std::abs(d));
  }
  return {log_abs, sign};
}

double log_normalizer(const Eigen::MatrixXd& l) {
  const Eigen::MatrixXd shifted =
      l + Eigen::MatrixXd::Identity(l.rows(), l.cols());
  return signed_log_det(shifted).first;
}

double ensemble_probability_impl(const Eigen::MatrixXd& l, Mask mask,
                                 double log_norm) {
  if (mask == 0) return std::exp(-log_norm);
  auto [log_abs, sign] = signed_log_det(principal_submatrix(l, mask));
  // PSD minors are >= 0; a negative sign is rounding at the boundary.
  if (sign <= 0) return 0.0;
  return std::exp(log_abs - log_norm);
}

}  // namespace

double ensemble_probability(const KernelMatrix& ensemble, Subset subset) {
  if (ensemble.kind() != KernelKind::ensemble) {
    throw InvalidArgument("ensemble_probability expects an ensemble kernel");
  }
  if (subset.n != ensemble.size()) {
    throw InvalidArgument("subset and kernel ground sets differ");
  }
  return ensemble_probability_impl(ensemble.matrix(), subset.mask,
                                   log_normalizer(ensemble.matrix()));
}

double atomic_probability_from_marginal(const KernelMatrix& marginal,
                                        Subset subset) {
  if (marginal.kind() != KernelKind::marginal) {
    throw InvalidArgument("atomic probability expects a marginal kernel");
  }
  if (subset.n != marginal.size()) {
    throw InvalidArgument("subset and kernel ground sets differ");
  }
  Eigen::MatrixXd shifted = marginal.matrix();
  for (int i = 0; i < marginal.size(); ++i) {
    if (!subset.contains(i)) shifted(i, i) -= 1.0;
  }
  const double det = shifted.partialPivLu().determinant();
  return std::min(1.0, std::abs(det));
}

DistributionTable enumerate_distribution(const KernelMatrix& ensemble) {
  if (ensemble.kind() != KernelKind::ensemble) {
    throw InvalidArgument("enumerate_distribution expects an ensemble kernel");
  }
  const int n = ensemble.size();
  if (n > kMaxEnumerable) {
    throw GroundSetTooLarge("cannot enumerate 2^" + std::to_string(n) +
                            " subsets");
  }
  const double log_norm = log_normalizer(ensemble.matrix());
  std::vector<double> probs(std::size_t{1} << n);
  for (Mask m = 0; m < probs.size(); ++m) {
    probs[m] = ensemble_probability_impl(ensemble.matrix(), m, log_norm);
  }
  // Renormalize away the rounding left by independent determinants.
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= total;
  return DistributionTable(n, std::move(probs));
}

double kl_divergence(const DistributionTable& p, const DistributionTable& q) {
  if (p.ground_size() != q.ground_size()) {
    throw InvalidArgument("tables have different ground sets");
  }
  double kl = 0.0;
  for (Mask m = 0; m < p.size(); ++m) {
    if (p[m] == 0.0) continue;
    if (q[m] <= 0.0) {
      throw SupportMismatch("q vanishes on subset mask " + std::to_string(m) +
                            " where p is positive");
    }
    kl += p[m] * std::log(p[m] / q[m]);
  }
  return kl;
}

SignDistance sign_distance(const Eigen::MatrixXd& estimate,
                           const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() ||
      estimate.rows() != estimate.cols()) {
    throw InvalidArgument("sign_distance needs square matrices of equal size");
  }
  const int n = static_cast<int>(truth.rows());
  if (n > kMaxEnumerable + 1) {
    throw GroundSetTooLarge("sign scan limited to n <= 21");
  }
  SignDistance best{std::numeric_limits<double>::infinity(), {0, n}};
  const Mask classes = n == 0 ? 1 : Mask{1} << (n - 1);
  for (Mask c = 0; c < classes; ++c) {
    const SignDiagonal d{c << 1, n};
    const double dist = (estimate - d.conjugate(truth)).norm();
    if (dist < best.distance) best = {dist, d};
  }
  return best;
}

SignDistance sign_distance(const KernelMatrix& estimate,
                           const KernelMatrix& truth) {
  return sign_distance(estimate.matrix(), truth.matrix());
}

double marginal_probability(const DistributionTable& table, Subset subset) {
  double total = 0.0;
  for (Mask m = 0; m < table.size(); ++m) {
    if ((m & subset.mask) == subset.mask) total += table[m];
  }
  return total;
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  long long n = 0;
  if (!(in >> n) || n <= 0 || n > 63) {
    throw ParseError("kernel file: first token must be a size in [1, 63]");
  }
  Eigen::MatrixXd m(n, n);
  for (long long i = 0; i < n; ++i) {
    for (long long j = 0; j < n; ++j) {
      if (!(in >> m(i, j))) {
        throw ParseError("kernel file: expected " + std::to_string(n * n) +
                         " entries");
      }
    }
  }
  std::string rest;
  if (in >> rest) throw ParseError("kernel file: trailing content '" + rest + "'");
  return m;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  out << m.rows() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << m(i, j);
    }
    out << '\n';
  }
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open kernel file " + path);
  return read_matrix(in);
}

void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw DppError("cannot write kernel file " + path);
  write_matrix(out, m);
}

Eigen::MatrixXd parse_inline_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(';', start), text.size());
    std::string row(text.substr(start, end - start));
    std::replace(row.begin(), row.end(), ',', ' ');
    std::istringstream ss(row);
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) throw ParseError("bad number in inline matrix");
    if (!values.empty()) rows.push_back(std::move(values));
    start = end + 1;
  }
  const std::size_t n = rows.size();
  if (n == 0) throw ParseError("empty inline matrix");
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw ParseError("inline matrix is not square");
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace dppmle

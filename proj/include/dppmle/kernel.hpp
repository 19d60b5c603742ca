#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dppmle {

using Mask = std::uint64_t;

enum class KernelKind { ensemble, marginal };

std::string to_string(KernelKind kind);

// Subset of the ground set {0, ..., n-1}; bit i of the mask marks item i.
struct Subset {
  Mask mask = 0;
  int n = 0;

  Subset() = default;
  Subset(Mask m, int ground);
  static Subset from_items(const std::vector<int>& items, int ground);

  int cardinality() const;
  bool contains(int item) const { return ((mask >> item) & 1u) != 0; }
  // Items in ascending order.
  std::vector<int> items() const;
  Subset complement() const;

  friend bool operator==(const Subset&, const Subset&) = default;
};

// Symmetric N x N kernel, either an L-ensemble or a marginal kernel K.
// Instances only come out of validate_kernel() and marginal_of(), so the
// symmetry and eigenvalue invariants always hold.
class KernelMatrix {
 public:
  int size() const { return static_cast<int>(entries_.rows()); }
  KernelKind kind() const { return kind_; }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  KernelMatrix(Eigen::MatrixXd entries, KernelKind kind)
      : entries_(std::move(entries)), kind_(kind) {}

  friend KernelMatrix validate_kernel(const Eigen::MatrixXd&, KernelKind,
                                      double);
  friend KernelMatrix marginal_of(const KernelMatrix&);

  Eigen::MatrixXd entries_;
  KernelKind kind_;
};

// Probability vector over all 2^n subsets, indexed by mask.
class DistributionTable {
 public:
  // Throws InvalidArgument unless every entry is >= 0 and the entries sum to
  // one within `tol`.
  DistributionTable(int n, std::vector<double> probs, double tol = 1e-12);

  int ground_size() const { return n_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](Mask mask) const { return probs_[mask]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  int n_;
  std::vector<double> probs_;
};

// Diagonal matrix with +-1 entries; bit i set means -1 at position i.
struct SignDiagonal {
  Mask signs = 0;
  int n = 0;

  double sign(int i) const { return ((signs >> i) & 1u) ? -1.0 : 1.0; }
  Eigen::MatrixXd matrix() const;
  // D * m * D
  Eigen::MatrixXd conjugate(const Eigen::MatrixXd& m) const;

  friend bool operator==(const SignDiagonal&, const SignDiagonal&) = default;
};

struct SignDistance {
  double distance = 0.0;
  SignDiagonal sign;
};

inline constexpr double kDefaultTolPsd = 1e-9;
inline constexpr double kSymmetrizeTol = 1e-10;
inline constexpr int kMaxEnumerable = 20;

KernelMatrix validate_kernel(const Eigen::MatrixXd& entries, KernelKind kind,
                             double tol_psd = kDefaultTolPsd);

// K = L (L + I)^{-1}, computed through the shared eigenbasis.
KernelMatrix marginal_of(const KernelMatrix& ensemble);

// det(L_J) / det(L + I), with det of the empty minor equal to one.
double ensemble_probability(const KernelMatrix& ensemble, Subset subset);

// |det(K - I_{complement of A})|, the atomic probability P(Y = A).
double atomic_probability_from_marginal(const KernelMatrix& marginal,
                                        Subset subset);

DistributionTable enumerate_distribution(const KernelMatrix& ensemble);

double kl_divergence(const DistributionTable& p, const DistributionTable& q);

// min over sign diagonals D of ||hat - D star D||_F. Scans the 2^{n-1}
// classes with the sign of item 0 fixed to +1 and returns the first
// minimizer in mask order.
SignDistance sign_distance(const Eigen::MatrixXd& estimate,
                           const Eigen::MatrixXd& truth);
SignDistance sign_distance(const KernelMatrix& estimate,
                           const KernelMatrix& truth);

Eigen::MatrixXd principal_submatrix(const Eigen::MatrixXd& m, Mask mask);

// Zero-pads a |J| x |J| block back into an n x n matrix on rows/cols J.
Eigen::MatrixXd embed_principal(const Eigen::MatrixXd& block, Mask mask,
                                int n);

// Determinant of a principal minor through an LU factorization;
// the empty minor has determinant one.
double principal_minor_det(const Eigen::MatrixXd& m, Mask mask);

// Marginal inclusion probabilities P(A subset of Y) summed from a table.
double marginal_probability(const DistributionTable& table, Subset subset);

// Plain-text kernel format: first line n, then n rows of n decimals.
Eigen::MatrixXd read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::string& path);
void save_matrix(const std::string& path, const Eigen::MatrixXd& m);

// Inline form used on the command line: rows split by ';', entries by ','
// (for example "1,1;1,2").
Eigen::MatrixXd parse_inline_matrix(std::string_view text);

}  // namespace dppmle

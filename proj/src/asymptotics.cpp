#include "dppmle/asymptotics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <type_traits>
#include <variant>

#include "dppmle/error.hpp"
#include "dppmle/likelihood.hpp"

namespace dppmle {

bool is_irreducible(const Eigen::MatrixXd& kernel) {
  const int n = static_cast<int>(kernel.rows());
  if (n <= 1) return true;
  std::vector<bool> seen(n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  int reached = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      if (!seen[j] && j != i && (kernel(i, j) != 0.0 || kernel(j, i) != 0.0)) {
        seen[j] = true;
        ++reached;
        stack.push_back(j);
      }
    }
  }
  return reached == n;
}

CovarianceMatrix asymptotic_covariance_symmetric(const KernelMatrix& truth) {
  if (truth.kind() != KernelKind::ensemble) {
    throw InvalidArgument("asymptotic covariance needs an ensemble kernel");
  }
  if (!is_irreducible(truth.matrix())) {
    throw ReducibleKernel("kernel is reducible; the Hessian is singular");
  }
  const int n = truth.size();
  const LikelihoodContext ctx(enumerate_distribution(truth));
  const Eigen::MatrixXd jac = symmetric_chart_jacobian(n);
  const Eigen::MatrixXd h = jac.transpose() * hessian(ctx, truth) * jac;
  Eigen::LLT<Eigen::MatrixXd> llt(-h);
  if (llt.info() != Eigen::Success) {
    throw SingularHessian("Hessian at the truth is not negative definite");
  }
  Eigen::MatrixXd cov =
      llt.solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
  return 0.5 * (cov + cov.transpose());
}

CovarianceMatrix asymptotic_covariance(const KernelMatrix& truth) {
  const Eigen::MatrixXd jac = symmetric_chart_jacobian(truth.size());
  return jac * asymptotic_covariance_symmetric(truth) * jac.transpose();
}

Eigen::Matrix3d covariance_2x2_explicit(const TwoByTwoParams& p) {
  if (!(p.b > 0.0)) throw ZeroB("explicit covariance requires b > 0");
  const double a = p.a, b = p.b, c = p.c;
  const double d = (a + 1) * (c + 1) - b * b;
  const double det = a * c - b * b;
  const double s12 = a * c / (2 * b) + a * b + a / (2 * b) * det;
  const double s13 = a * c;
  const double s23 = a * c / (2 * b) + b * c + c / (2 * b) * det;
  const double s22 = (a * c / (b * b) - 1) / 4 * d + (a + c + 4 * a * c) / 4;
  Eigen::Matrix3d m;
  m << a + a * a, s12, s13,
       s12, s22, s23,
       s13, s23, c + c * c;
  return d * m;
}

Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) {
    throw EigendecompositionFailure("inverse square root failed");
  }
  const Eigen::VectorXd inv_root =
      eig.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_root.asDiagonal() *
         eig.eigenvectors().transpose();
}

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double kolmogorov_distance_normal(std::vector<double> values) {
  if (values.empty()) return 1.0;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = standard_normal_cdf(values[i]);
    worst = std::max({worst, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return worst;
}

namespace {

class BatchSource {
 public:
  BatchSource(const KernelMatrix& kernel, SamplerKind kind) : n_(kernel.size()) {
    if (kind == SamplerKind::spectral) {
      sampler_.emplace<SpectralSampler>(kernel);
    } else {
      sampler_.emplace<EnumerationSampler>(enumerate_distribution(kernel));
    }
    kind_ = kind;
  }

  SampleBatch draw(std::size_t size, std::uint64_t seed) const {
    SampleBatch batch{n_, {}, seed, kind_};
    batch.draws.resize(size);
    Rng rng = make_rng(seed);
    std::visit(
        [&](const auto& s) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(s)>, std::monostate>) {
            for (auto& m : batch.draws) m = s(rng).mask;
          }
        },
        sampler_);
    return batch;
  }

 private:
  int n_;
  SamplerKind kind_ = SamplerKind::enumeration;
  std::variant<std::monostate, SpectralSampler, EnumerationSampler> sampler_;
};

bool outside_marginal_band(const Eigen::MatrixXd& l) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(l, Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lambda = eig.eigenvalues()(i);
    const double k = lambda / (1.0 + lambda);
    if (!(k > 0.05 && k < 0.95)) return true;
  }
  return false;
}

EstimatorKind resolve(EstimatorKind kind, int n) {
  if (kind != EstimatorKind::automatic) return kind;
  return n == 2 ? EstimatorKind::closed_form_2x2 : EstimatorKind::newton;
}

}  // namespace

std::optional<Eigen::MatrixXd> estimate_kernel(const SampleBatch& batch,
                                               const KernelMatrix& truth,
                                               const CltOptions& options) {
  const int n = truth.size();
  Eigen::MatrixXd estimate;
  try {
    switch (resolve(options.estimator, n)) {
      case EstimatorKind::closed_form_2x2: {
        if (n != 2) throw InvalidArgument("closed form needs a 2 x 2 kernel");
        estimate = mle_2x2(empirical_distribution(batch)).params.matrix();
        break;
      }
      case EstimatorKind::block:
        estimate = mle_block(batch, BlockStructure::consecutive(n));
        break;
      case EstimatorKind::newton:
      case EstimatorKind::automatic: {
        const LikelihoodContext ctx(empirical_distribution(batch));
        const Eigen::MatrixXd start =
            options.newton_start.value_or(truth.matrix());
        SolverResult r = newton_raphson(ctx, start, options.newton);
        if (r.trace.status != SolverStatus::converged) return std::nullopt;
        estimate = std::move(r.estimate);
        break;
      }
    }
  } catch (const DppError&) {
    return std::nullopt;
  }
  const SignDistance aligned = sign_distance(estimate, truth.matrix());
  return aligned.sign.conjugate(estimate);
}

CltReport clt_experiment(const KernelMatrix& truth, const CltOptions& options) {
  if (options.n == 0 || options.reps == 0) {
    throw InvalidArgument("sample size and replications must be positive");
  }
  const int n = truth.size();
  const int dim = n * (n + 1) / 2;
  const BatchSource source(truth, options.sampler);
  const Eigen::VectorXd truth_coords = to_symmetric_coords(truth.matrix());
  const double root_n = std::sqrt(static_cast<double>(options.n));

  std::vector<Eigen::VectorXd> deviations;
  CltReport report;
  report.reps = options.reps;
  for (std::size_t rep = 0; rep < options.reps; ++rep) {
    const SampleBatch batch = source.draw(options.n, mix_seed(options.seed, rep));
    const auto est = estimate_kernel(batch, truth, options);
    if (!est) {
      ++report.failures;
      continue;
    }
    ++report.successes;
    if (outside_marginal_band(*est)) ++report.outside_band;
    report.ell_distances.push_back((*est - truth.matrix()).norm());
    deviations.push_back(root_n * (to_symmetric_coords(*est) - truth_coords));
  }

  report.mean = Eigen::VectorXd::Zero(dim);
  report.covariance = Eigen::MatrixXd::Zero(dim, dim);
  if (deviations.size() < 2) {
    report.degenerate = true;
    if (deviations.size() == 1) report.mean = deviations.front();
    return report;
  }
  for (const auto& d : deviations) report.mean += d;
  report.mean /= static_cast<double>(deviations.size());
  for (const auto& d : deviations) {
    const Eigen::VectorXd c = d - report.mean;
    report.covariance += c * c.transpose();
  }
  report.covariance /= static_cast<double>(deviations.size() - 1);
  return report;
}

RateReport berry_esseen_experiment(const TwoByTwoParams& truth,
                                   const std::vector<std::size_t>& sizes,
                                   std::size_t reps, std::uint64_t seed,
                                   SamplerKind sampler) {
  if (!(truth.b > 0.0)) throw ZeroB("Berry-Esseen experiment requires b > 0");
  if (sizes.empty() || reps == 0) {
    throw InvalidArgument("need at least one size and one replication");
  }
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw InvalidArgument("sample sizes must be ascending");
  }
  const KernelMatrix kernel =
      validate_kernel(truth.matrix(), KernelKind::ensemble);
  const BatchSource source(kernel, sampler);
  const Eigen::Matrix3d whiten = inverse_sqrt_psd(covariance_2x2_explicit(truth));
  const Eigen::Vector3d center = truth.vector();
  constexpr std::array<double, 3> kGrid{-1.0, 0.0, 1.0};

  RateReport report;
  report.replications = reps;
  report.seed = seed;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const std::size_t n = sizes[s];
    const std::uint64_t size_seed = mix_seed(seed, s);
    const double root_n = std::sqrt(static_cast<double>(n));
    std::array<std::vector<double>, 3> comps;
    std::array<std::size_t, 27> below{};
    std::size_t failures = 0, outside = 0, ok = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const SampleBatch batch = source.draw(n, mix_seed(size_seed, rep));
      TwoByTwoEstimate est;
      try {
        est = mle_2x2(empirical_distribution(batch));
      } catch (const DegenerateTable&) {
        ++failures;
        continue;
      }
      ++ok;
      if (outside_marginal_band(est.params.matrix())) ++outside;
      const Eigen::Vector3d z = whiten * (root_n * (est.params.vector() - center));
      for (int k = 0; k < 3; ++k) comps[k].push_back(z(k));
      for (int g = 0; g < 27; ++g) {
        if (z(0) < kGrid[g % 3] && z(1) < kGrid[(g / 3) % 3] &&
            z(2) < kGrid[g / 9]) {
          ++below[g];
        }
      }
    }
    double comp = 0.0;
    for (auto& values : comps) {
      comp = std::max(comp, kolmogorov_distance_normal(values));
    }
    double grid = ok == 0 ? 1.0 : 0.0;
    for (int g = 0; g < 27 && ok > 0; ++g) {
      const double expected = standard_normal_cdf(kGrid[g % 3]) *
                              standard_normal_cdf(kGrid[(g / 3) % 3]) *
                              standard_normal_cdf(kGrid[g / 9]);
      grid = std::max(grid, std::abs(static_cast<double>(below[g]) / ok - expected));
    }
    report.sample_sizes.push_back(n);
    report.component_distances.push_back(comp);
    report.grid_distances.push_back(grid);
    report.kolmogorov_distances.push_back(std::max(comp, grid));
    report.failures.push_back(failures);
    report.outside_band.push_back(outside);
  }
  return report;
}

void write_rate_csv(std::ostream& out, const RateReport& report) {
  out << "n,ks_distance,reps,seed\n" << std::setprecision(17);
  for (std::size_t i = 0; i < report.sample_sizes.size(); ++i) {
    out << report.sample_sizes[i] << ',' << report.kolmogorov_distances[i]
        << ',' << report.replications << ',' << report.seed << '\n';
  }
}

}  // namespace dppmle

#include "dppmle/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "dppmle/asymptotics.hpp"
#include "dppmle/closed_form.hpp"
#include "dppmle/kernel.hpp"
#include "dppmle/likelihood.hpp"
#include "dppmle/numdiff.hpp"
#include "dppmle/optimize.hpp"

namespace dppmle {

std::string to_string(Method method) {
  switch (method) {
    case Method::newton: return "newton";
    case Method::sgd: return "sgd";
    case Method::closed2x2: return "closed2x2";
    case Method::block: return "block";
    case Method::moments: return "moments";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "newton") return Method::newton;
  if (name == "sgd") return Method::sgd;
  if (name == "closed2x2") return Method::closed2x2;
  if (name == "block") return Method::block;
  if (name == "moments") return Method::moments;
  throw ConfigError("unknown method '" + name + "'");
}

namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_kernel_argument(j.get<std::string>());
  if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a 2-D array");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != n) {
      throw ConfigError("matrix must be square");
    }
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

std::string join_entries(const Eigen::MatrixXd& m) {
  std::ostringstream ss;
  ss << std::setprecision(10);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i || j) ss << ';';
      ss << m(i, j);
    }
  }
  return ss.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  if (name == "table1") {
    c.kernels = {
        {"H1", mat({{1, 0.2, 0}, {0.2, 2, 0.3}, {0, 0.3, 3}}),
         mat({{1, 0.1, 0}, {0.1, 1, 0.1}, {0, 0.1, 1}})},
        {"H2", mat({{7, 0, 0}, {0, 5, 0}, {0, 0, 9}}),
         Eigen::MatrixXd::Identity(3, 3)},
        {"H3", mat({{1, 1}, {1, 2}}), mat({{0.5, 0.1}, {0.1, 0.5}})},
    };
    c.methods = {Method::newton, Method::sgd};
    c.sample_sizes = {30000};
    c.output_dir = "out/table1";
    return c;
  }
  if (name == "twobytwo") {
    c.kernels = {{"H3", mat({{1, 1}, {1, 2}}), std::nullopt}};
    c.methods = {Method::closed2x2};
    c.sample_sizes = {300, 3000, 10000, 30000};
    c.output_dir = "out/twobytwo";
    return c;
  }
  throw ConfigError("unknown preset '" + name + "' (table1, twobytwo)");
}

Eigen::MatrixXd parse_kernel_argument(const std::string& text) {
  if (std::filesystem::exists(text)) {
    try {
      return load_matrix(text);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }
  try {
    return parse_inline_matrix(text);
  } catch (const ParseError& e) {
    throw ConfigError("kernel '" + text + "' is neither a file nor an inline matrix: " +
                      e.what());
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("preset")) c = preset_config(j.at("preset").get<std::string>());
    if (j.contains("kernels")) {
      c.kernels.clear();
      int k = 0;
      for (const auto& item : j.at("kernels")) {
        KernelSpec spec;
        spec.id = item.value("id", "K" + std::to_string(k++));
        spec.truth = matrix_from_json(item.at("matrix"));
        if (item.contains("initial")) spec.initial = matrix_from_json(item.at("initial"));
        c.kernels.push_back(std::move(spec));
      }
    }
    if (j.contains("kernel")) {
      c.kernels = {{"K0", matrix_from_json(j.at("kernel")), std::nullopt}};
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("method")) c.methods = {parse_method(j.at("method").get<std::string>())};
    if (j.contains("sample_sizes")) {
      c.sample_sizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
    }
    if (j.contains("iterations")) c.iterations = j.at("iterations").get<long long>();
    if (j.contains("eta")) c.eta = j.at("eta").get<double>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("sampler")) c.sampler = parse_sampler_kind(j.at("sampler").get<std::string>());
    if (j.contains("blocks")) {
      c.blocks = j.at("blocks").get<std::vector<std::pair<int, int>>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

void validate_config(const ExperimentConfig& c) {
  if (c.kernels.empty()) throw ConfigError("no kernel given");
  if (c.methods.empty()) throw ConfigError("no method given");
  if (c.sample_sizes.empty()) throw ConfigError("sample_sizes is empty");
  if (c.seeds.empty()) throw ConfigError("seeds is empty");
  for (std::size_t n : c.sample_sizes) {
    if (n == 0) throw ConfigError("sample sizes must be positive");
  }
  if (!(c.eta > 0.0)) throw ConfigError("eta must be positive");
  if (c.iterations && *c.iterations < 0) throw ConfigError("iterations must be >= 0");
  for (const auto& k : c.kernels) {
    try {
      validate_kernel(k.truth, KernelKind::ensemble);
    } catch (const DppError& e) {
      throw ConfigError("kernel " + k.id + ": " + e.what());
    }
    if (k.truth.rows() > kMaxEnumerable) {
      throw ConfigError("kernel " + k.id + " is too large to enumerate");
    }
    if (k.initial && (k.initial->rows() != k.truth.rows() ||
                      k.initial->cols() != k.truth.cols())) {
      throw ConfigError("kernel " + k.id + ": initial kernel has the wrong size");
    }
    for (Method m : c.methods) {
      if (m == Method::closed2x2 && k.truth.rows() != 2) {
        throw ConfigError("closed2x2 needs a 2 x 2 kernel (" + k.id + ")");
      }
      if (m == Method::block) {
        if (c.blocks.empty()) throw ConfigError("block method needs 'blocks'");
        try {
          if (BlockStructure(c.blocks).ground_size() != k.truth.rows()) {
            throw ConfigError("blocks do not cover kernel " + k.id);
          }
        } catch (const InvalidArgument& e) {
          throw ConfigError(e.what());
        }
      }
    }
  }
}

RunRow run_single(const KernelSpec& kernel, Method method,
                  const SampleBatch& batch, const ExperimentConfig& config) {
  const Eigen::Index n = kernel.truth.rows();
  RunRow row{kernel.id, batch.size(), batch.seed, method, 0, "", 0.0, {}};
  const Eigen::MatrixXd initial =
      kernel.initial.value_or(Eigen::MatrixXd::Identity(n, n));
  try {
    switch (method) {
      case Method::newton: {
        NewtonOptions opt;
        opt.max_iter = static_cast<int>(config.iterations.value_or(kDefaultNewtonIters));
        const LikelihoodContext ctx(empirical_distribution(batch));
        SolverResult r = newton_raphson(ctx, initial, opt);
        row.iterations = r.trace.iterations;
        row.status = to_string(r.trace.status);
        row.estimate = std::move(r.estimate);
        break;
      }
      case Method::sgd: {
        SgdOptions opt;
        opt.eta = config.eta;
        opt.iters = config.iterations.value_or(kDefaultSgdIters);
        opt.seed = mix_seed(batch.seed, 0x5347);
        SolverResult r = sgd(batch, initial, opt);
        row.iterations = r.trace.iterations;
        row.status = to_string(r.trace.status);
        row.estimate = std::move(r.estimate);
        break;
      }
      case Method::closed2x2: {
        const TwoByTwoEstimate e = mle_2x2(empirical_distribution(batch));
        row.status = e.branch == TwoByTwoBranch::interior ? "interior" : "boundary_b0";
        row.estimate = e.params.matrix();
        break;
      }
      case Method::block:
        row.estimate = mle_block(batch, BlockStructure(config.blocks));
        row.status = "closed_form";
        break;
      case Method::moments: {
        const MomentsEstimate e = moments_estimator(empirical_distribution(batch));
        row.estimate = e.offdiag_magnitudes;
        row.estimate.diagonal() = e.diagonal;
        row.status = "magnitudes";
        break;
      }
    }
  } catch (const DegenerateTable& e) {
    row.status = "degenerate";
    row.estimate = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  } catch (const SingularPrincipalMinor& e) {
    row.status = "singular";
    row.estimate = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  }
  row.ell_distance = row.estimate.allFinite()
                         ? sign_distance(row.estimate, kernel.truth).distance
                         : std::numeric_limits<double>::quiet_NaN();
  return row;
}

ExperimentResult run_cells(const ExperimentConfig& config) {
  validate_config(config);
  ExperimentResult result;
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t k = 0; k < config.kernels.size(); ++k) {
    const KernelSpec& spec = config.kernels[k];
    const KernelMatrix truth = validate_kernel(spec.truth, KernelKind::ensemble);
    for (Method method : config.methods) {
      nlohmann::json medians = nlohmann::json::object();
      nlohmann::json failed = nlohmann::json::object();
      for (std::size_t n : config.sample_sizes) {
        std::vector<double> ell;
        std::size_t not_finished = 0;
        for (std::uint64_t seed : config.seeds) {
          const std::uint64_t batch_seed = mix_seed(mix_seed(seed, k), n);
          const SampleBatch batch = sample_batch(truth, n, batch_seed, config.sampler);
          RunRow row = run_single(spec, method, batch, config);
          row.seed = seed;
          if (std::isfinite(row.ell_distance)) ell.push_back(row.ell_distance);
          if (row.status == "diverged" || row.status == "singular" ||
              row.status == "degenerate") {
            ++not_finished;
          }
          result.rows.push_back(std::move(row));
        }
        const double med = median(ell);
        medians[std::to_string(n)] = std::isfinite(med) ? nlohmann::json(med) : nlohmann::json();
        failed[std::to_string(n)] = not_finished;
      }
      groups.push_back({{"kernel", spec.id},
                        {"method", to_string(method)},
                        {"median_ell_by_n", medians},
                        {"unstable_runs_by_n", failed}});
    }
  }
  result.summary = {{"runs", result.rows.size()},
                    {"seeds", config.seeds},
                    {"eta", config.eta},
                    {"sampler", to_string(config.sampler)},
                    {"groups", groups}};
  return result;
}

void write_runs_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  out << "kernel,n,seed,method,iterations,status,ell_distance,estimate\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.kernel_id << ',' << r.n << ',' << r.seed << ',' << to_string(r.method)
        << ',' << r.iterations << ',' << r.status << ',' << r.ell_distance << ','
        << join_entries(r.estimate) << '\n';
  }
}

int run_experiment(const ExperimentConfig& config, std::ostream& log) {
  const ExperimentResult result = run_cells(config);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create " + config.output_dir + ": " + ec.message());

  const fs::path dir(config.output_dir);
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(dir / "runs.csv");
    write_runs_csv(out, result.rows);
  }
  {
    auto out = open(dir / "summary.csv");
    out << "kernel,method,n,median_ell,unstable_runs\n" << std::setprecision(10);
    for (const auto& g : result.summary["groups"]) {
      for (std::size_t size : config.sample_sizes) {
        const std::string n = std::to_string(size);
        const auto& med = g["median_ell_by_n"][n];
        out << g["kernel"].get<std::string>() << ',' << g["method"].get<std::string>()
            << ',' << n << ',' << (med.is_null() ? std::string("nan") : med.dump()) << ','
            << g["unstable_runs_by_n"][n].get<std::size_t>() << '\n';
      }
    }
  }
  {
    auto out = open(dir / "summary.json");
    out << result.summary.dump(2) << '\n';
  }
  log << std::setprecision(6);
  for (const auto& r : result.rows) {
    log << r.kernel_id << " n=" << r.n << " seed=" << r.seed << ' '
        << to_string(r.method) << ' ' << r.status << " ell=" << r.ell_distance
        << " estimate=[" << join_entries(r.estimate) << "]\n";
  }
  log << "wrote " << (dir / "runs.csv").string() << ", summary.csv, summary.json\n";
  return 0;
}

namespace {

Eigen::MatrixXd random_ensemble(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 2.0 * uniform01(rng) - 1.0;
  return a * a.transpose() + 0.2 * Eigen::MatrixXd::Identity(n, n);
}

struct Check {
  std::ostream& out;
  int failures = 0;

  void operator()(const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    if (!ok) ++failures;
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(4) << std::scientific << v;
  return ss.str();
}

}  // namespace

int verify(VerifyLevel level, std::uint64_t seed, std::ostream& out) {
  const bool full = level == VerifyLevel::full;
  Rng rng = make_rng(seed);
  Check check{out};

  // Probability routes: determinants, marginal-kernel atomics, inclusion sums.
  {
    const int kernels = full ? 200 : 50;
    double worst = 0.0;
    for (int t = 0; t < kernels; ++t) {
      const int n = 2 + t % 3;
      const KernelMatrix l = validate_kernel(random_ensemble(n, rng), KernelKind::ensemble);
      const KernelMatrix k = marginal_of(l);
      const DistributionTable table = enumerate_distribution(l);
      for (Mask m = 0; m < table.size(); ++m) {
        const Subset s(m, n);
        worst = std::max(worst, std::abs(ensemble_probability(l, s) -
                                         atomic_probability_from_marginal(k, s)));
        worst = std::max(worst, std::abs(marginal_probability(table, s) -
                                         principal_minor_det(k.matrix(), m)));
      }
    }
    check("probability_routes", worst <= 1e-10, "max deviation " + fmt(worst));
  }

  // Spectral sampler against the exact table.
  {
    const std::size_t draws = full ? 100000 : 20000;
    const KernelMatrix l = validate_kernel(
        (Eigen::MatrixXd(3, 3) << 1, 0.4, 0.1, 0.4, 2, 0.3, 0.1, 0.3, 0.8).finished(),
        KernelKind::ensemble);
    const DistributionTable table = enumerate_distribution(l);
    const SampleBatch batch = sample_batch(l, draws, mix_seed(seed, 1), SamplerKind::spectral);
    const DistributionTable freq = empirical_distribution(batch);
    double chi2 = 0.0, tv = 0.0;
    int bins = 0;
    for (Mask m = 0; m < table.size(); ++m) {
      tv += 0.5 * std::abs(freq[m] - table[m]);
      const double expected = table[m] * draws;
      if (expected < 5.0) continue;
      chi2 += std::pow(freq[m] * draws - expected, 2) / expected;
      ++bins;
    }
    boost::math::chi_squared_distribution<double> dist(bins - 1);
    const double p = boost::math::cdf(boost::math::complement(dist, chi2));
    check("spectral_sampler", p > 1e-3 && tv <= 0.01,
          "chi2 p-value " + fmt(p) + ", TV " + fmt(tv));
  }

  // Analytic gradient and Hessian against central differences.
  {
    const int cases = full ? 100 : 20;
    double grad_err = 0.0, hess_err = 0.0;
    for (int t = 0; t < cases; ++t) {
      const int n = 2 + t % 2;
      const KernelMatrix truth = validate_kernel(random_ensemble(n, rng), KernelKind::ensemble);
      const LikelihoodContext ctx(
          empirical_distribution(sample_batch(truth, 500, mix_seed(seed, 100 + t),
                                              SamplerKind::enumeration)));
      const Eigen::MatrixXd at = random_ensemble(n, rng);
      const auto phi = [&](const Eigen::MatrixXd& m) { return log_likelihood(ctx, m); };
      const Eigen::MatrixXd g = gradient(ctx, at);
      const Eigen::MatrixXd fd = symmetric_fd_gradient(phi, at);
      grad_err = std::max(grad_err, ((g - fd).array().abs() /
                                     (1.0 + g.array().abs())).maxCoeff());
      const Eigen::MatrixXd h = hessian(ctx, at);
      const Eigen::MatrixXd fdh = symmetric_fd_jacobian(
          [&](const Eigen::MatrixXd& m) { return gradient(ctx, m); }, at);
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          const Eigen::VectorXd col = 0.5 * (h.col(k * n + l) + h.col(l * n + k));
          const Eigen::VectorXd diff = col - fdh.col(k * n + l);
          hess_err = std::max(hess_err, (diff.array().abs() /
                                         (1.0 + col.array().abs())).maxCoeff());
        }
      }
    }
    check("gradient_fd", grad_err <= 1e-6, "max rel error " + fmt(grad_err));
    check("hessian_fd", hess_err <= 1e-4, "max rel error " + fmt(hess_err));
  }

  // Explicit 2 x 2 covariance against the inverse finite-difference Hessian.
  {
    double worst = 0.0;
    for (int t = 0; t < (full ? 50 : 10); ++t) {
      const double a = 0.2 + 3.0 * uniform01(rng);
      const double c = 0.2 + 3.0 * uniform01(rng);
      const double b = (0.1 + 0.8 * uniform01(rng)) * std::sqrt(a * c);
      const TwoByTwoParams p{a, b, c};
      const DistributionTable table = forward_probs_2x2(p);
      const Eigen::MatrixXd h = fd_hessian(
          [&](const Eigen::VectorXd& x) { return abc::log_likelihood(table, x); },
          p.vector(), 3e-4 * std::min({a, b, c}));
      const Eigen::MatrixXd inv = -h.inverse();
      const Eigen::Matrix3d formula = covariance_2x2_explicit(p);
      worst = std::max(worst, ((inv - formula).array().abs() /
                               formula.array().abs().maxCoeff()).maxCoeff());
    }
    check("covariance_formula", worst <= 1e-4, "max rel error " + fmt(worst));
  }

  if (full) {
    const TwoByTwoParams truth{1, 1, 2};
    CltOptions opt;
    opt.n = 10000;
    opt.reps = 10000;
    opt.seed = mix_seed(seed, 7);
    const CltReport r = clt_experiment(
        validate_kernel(truth.matrix(), KernelKind::ensemble), opt);
    const Eigen::Matrix3d target = covariance_2x2_explicit(truth);
    const double worst =
        ((r.covariance - target).array().abs() / target.array().abs()).maxCoeff();
    check("clt_covariance", worst <= 0.10, "max rel deviation " + fmt(worst));
  }

  out << (check.failures == 0 ? "all checks passed" : "some checks failed") << '\n';
  return check.failures == 0 ? 0 : 1;
}

}  // namespace dppmle

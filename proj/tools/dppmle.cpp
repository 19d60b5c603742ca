// Command-line harness: sampling, estimation, experiments, rate reports and
// the oracle self-checks.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dppmle/asymptotics.hpp"
#include "dppmle/closed_form.hpp"
#include "dppmle/experiment.hpp"
#include "dppmle/kernel.hpp"
#include "dppmle/likelihood.hpp"
#include "dppmle/optimize.hpp"
#include "dppmle/sampling.hpp"

namespace {

using namespace dppmle;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

int cmd_sample(const std::string& kernel_arg, std::size_t n, std::uint64_t seed,
               const std::string& sampler, const std::string& out_path) {
  const KernelMatrix l =
      validate_kernel(parse_kernel_argument(kernel_arg), KernelKind::ensemble);
  const SampleBatch batch = sample_batch(l, n, seed, parse_sampler_kind(sampler));
  if (out_path.empty()) {
    write_batch_csv(std::cout, batch);
  } else {
    auto out = open_output(out_path);
    write_batch_csv(out, batch);
  }
  return 0;
}

struct EstimateArgs {
  std::string kernel;
  std::string batch_path;
  std::string init;
  std::string method = "newton";
  std::size_t n = 30000;
  std::uint64_t seed = 0;
  std::optional<long long> iters;
  double eta = 0.1;
  std::string trace_out;
};

int cmd_estimate(const EstimateArgs& a) {
  const KernelMatrix truth =
      validate_kernel(parse_kernel_argument(a.kernel), KernelKind::ensemble);
  SampleBatch batch;
  if (!a.batch_path.empty()) {
    std::ifstream in(a.batch_path);
    if (!in) throw IoError("cannot open " + a.batch_path);
    batch = read_batch_csv(in, truth.size());
  } else {
    batch = sample_batch(truth, a.n, a.seed, SamplerKind::spectral);
  }

  ExperimentConfig config;
  config.iterations = a.iters;
  config.eta = a.eta;
  if (parse_method(a.method) == Method::block) {
    config.blocks = BlockStructure::consecutive(truth.size()).blocks();
  }
  KernelSpec spec{"K0", truth.matrix(), std::nullopt};
  if (!a.init.empty()) spec.initial = parse_kernel_argument(a.init);

  const Method method = parse_method(a.method);
  if (method == Method::closed2x2 && truth.size() != 2) {
    throw ConfigError("closed2x2 needs a 2 x 2 kernel");
  }
  const RunRow row = run_single(spec, method, batch, config);
  std::cout << "method " << a.method << " status " << row.status << " iterations "
            << row.iterations << " ell " << row.ell_distance << '\n';
  write_matrix(std::cout, row.estimate);

  if (!a.trace_out.empty() && (method == Method::newton || method == Method::sgd)) {
    const Eigen::MatrixXd init = spec.initial.value_or(
        Eigen::MatrixXd::Identity(truth.size(), truth.size()));
    SolverResult r;
    if (method == Method::newton) {
      NewtonOptions opt;
      opt.max_iter = static_cast<int>(a.iters.value_or(kDefaultNewtonIters));
      r = newton_raphson(LikelihoodContext(empirical_distribution(batch)), init, opt);
    } else {
      SgdOptions opt;
      opt.eta = a.eta;
      opt.iters = a.iters.value_or(kDefaultSgdIters);
      opt.seed = mix_seed(batch.seed, 0x5347);
      r = sgd(batch, init, opt);
    }
    auto out = open_output(a.trace_out);
    write_trace_csv(out, r.trace);
  }
  return 0;
}

int cmd_berry_esseen(const std::string& kernel_arg, const std::vector<std::size_t>& sizes,
                     std::size_t reps, std::uint64_t seed, const std::string& out_path) {
  const Eigen::MatrixXd m = parse_kernel_argument(kernel_arg);
  if (m.rows() != 2) throw ConfigError("berry-esseen needs a 2 x 2 kernel");
  validate_kernel(m, KernelKind::ensemble);
  const TwoByTwoParams truth = TwoByTwoParams::from_matrix(m);
  const RateReport report = berry_esseen_experiment(truth, sizes, reps, seed);
  if (out_path.empty()) {
    write_rate_csv(std::cout, report);
  } else {
    auto out = open_output(out_path);
    write_rate_csv(out, report);
  }
  for (std::size_t i = 0; i < report.sample_sizes.size(); ++i) {
    std::cerr << "n=" << report.sample_sizes[i]
              << " components=" << report.component_distances[i]
              << " grid=" << report.grid_distances[i]
              << " failures=" << report.failures[i]
              << " outside_band=" << report.outside_band[i] << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum-likelihood estimation of finite determinantal point processes"};
  app.require_subcommand(1);

  std::string kernel_arg, out_path, sampler = "spectral";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  auto* sample = app.add_subcommand("sample", "draw a batch and write it as CSV");
  sample->add_option("--kernel", kernel_arg, "kernel file or inline matrix like 1,1;1,2")
      ->required();
  sample->add_option("--n", n, "number of draws");
  sample->add_option("--seed", seed, "RNG seed");
  sample->add_option("--sampler", sampler, "spectral or enumeration");
  sample->add_option("--out", out_path, "output CSV (stdout when omitted)");

  EstimateArgs est;
  long long est_iters = -1;
  auto* estimate = app.add_subcommand("estimate", "estimate a kernel from one batch");
  estimate->add_option("--kernel", est.kernel, "true kernel (file or inline)")->required();
  estimate->add_option("--batch", est.batch_path, "batch CSV; sampled from --kernel if omitted");
  estimate->add_option("--init", est.init, "initial kernel for newton/sgd");
  estimate->add_option("--method", est.method, "newton, sgd, closed2x2, block, moments");
  estimate->add_option("--n", est.n, "sample size when sampling");
  estimate->add_option("--seed", est.seed, "RNG seed when sampling");
  estimate->add_option("--iters", est_iters, "iterations for newton/sgd");
  estimate->add_option("--eta", est.eta, "SGD step size");
  estimate->add_option("--trace", est.trace_out, "write iter,objective,grad_norm CSV");

  std::string preset, config_path, exp_kernel, exp_method, exp_out;
  std::vector<std::size_t> exp_n;
  std::vector<std::uint64_t> exp_seeds;
  long long exp_iters = -1;
  double exp_eta = -1.0;
  auto* experiment = app.add_subcommand("experiment", "run a grid of (kernel, n, seed) cells");
  experiment->add_option("--preset", preset, "table1 or twobytwo");
  experiment->add_option("--config", config_path, "JSON config file");
  experiment->add_option("--kernel", exp_kernel, "kernel file or inline matrix");
  experiment->add_option("--method", exp_method, "newton, sgd, closed2x2, block, moments");
  experiment->add_option("--n", exp_n, "sample sizes")->delimiter(',');
  experiment->add_option("--seed", exp_seeds, "seeds")->delimiter(',');
  experiment->add_option("--iters", exp_iters, "iterations");
  experiment->add_option("--eta", exp_eta, "SGD step size");
  experiment->add_option("--out", exp_out, "output directory");

  std::vector<std::size_t> sizes{100, 400, 1600, 6400};
  std::size_t reps = 5000;
  std::string be_kernel = "1,1;1,2", be_out;
  std::uint64_t be_seed = 0;
  auto* berry = app.add_subcommand("berry-esseen", "Kolmogorov distance to normality by n");
  berry->add_option("--kernel", be_kernel, "2 x 2 kernel with positive off-diagonal");
  berry->add_option("--sizes", sizes, "ascending sample sizes")->delimiter(',');
  berry->add_option("--reps", reps, "replications per size");
  berry->add_option("--seed", be_seed, "RNG seed");
  berry->add_option("--out", be_out, "output CSV (stdout when omitted)");

  std::string level = "quick";
  std::uint64_t verify_seed = 20240501;
  auto* verify_cmd = app.add_subcommand("verify", "run the oracle self-checks");
  verify_cmd->add_option("--level", level, "quick or full")
      ->check(CLI::IsMember({"quick", "full"}));
  verify_cmd->add_option("--seed", verify_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sample) return cmd_sample(kernel_arg, n, seed, sampler, out_path);
    if (*estimate) {
      if (est_iters >= 0) est.iters = est_iters;
      return cmd_estimate(est);
    }
    if (*experiment) {
      ExperimentConfig config;
      if (!config_path.empty()) {
        config = load_config(config_path);
      } else if (!preset.empty()) {
        config = preset_config(preset);
      }
      if (!config_path.empty() && !preset.empty()) {
        throw ConfigError("use either --preset or --config");
      }
      if (!exp_kernel.empty()) {
        config.kernels = {{"K0", parse_kernel_argument(exp_kernel), std::nullopt}};
      }
      if (!exp_method.empty()) config.methods = {parse_method(exp_method)};
      if (!exp_n.empty()) config.sample_sizes = exp_n;
      if (!exp_seeds.empty()) config.seeds = exp_seeds;
      if (exp_iters >= 0) config.iterations = exp_iters;
      if (exp_eta > 0) config.eta = exp_eta;
      if (!exp_out.empty()) config.output_dir = exp_out;
      if (config.methods.size() == 1 && config.methods[0] == Method::block &&
          config.blocks.empty() && !config.kernels.empty() &&
          config.kernels[0].truth.rows() % 2 == 0) {
        config.blocks = BlockStructure::consecutive(
                            static_cast<int>(config.kernels[0].truth.rows()))
                            .blocks();
      }
      return run_experiment(config, std::cout);
    }
    if (*berry) return cmd_berry_esseen(be_kernel, sizes, reps, be_seed, be_out);
    if (*verify_cmd) {
      return verify(level == "full" ? VerifyLevel::full : VerifyLevel::quick,
                    verify_seed, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DppError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}

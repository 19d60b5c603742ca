#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dppmle/error.hpp"
#include "dppmle/sampling.hpp"

namespace dppmle {

// Exit code 2.
class ConfigError : public DppError {
 public:
  using DppError::DppError;
};

// Exit code 3.
class IoError : public DppError {
 public:
  using DppError::DppError;
};

enum class Method { newton, sgd, closed2x2, block, moments };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct KernelSpec {
  std::string id;
  Eigen::MatrixXd truth;
  std::optional<Eigen::MatrixXd> initial;  // identity when unset
};

struct ExperimentConfig {
  std::vector<KernelSpec> kernels;
  std::vector<Method> methods;
  std::vector<std::size_t> sample_sizes;
  std::optional<long long> iterations;  // per-method default when unset
  double eta = 0.1;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";
  SamplerKind sampler = SamplerKind::spectral;
  std::vector<std::pair<int, int>> blocks;  // required by the block method
};

inline constexpr long long kDefaultNewtonIters = 100;
inline constexpr long long kDefaultSgdIters = 60000;

// Presets: "table1" (three kernels, Newton k = 100 and SGD k = 60000 at
// n = 30000) and "twobytwo" (closed form on [[1,1],[1,2]] at
// n = 300, 3000, 10000, 30000).
ExperimentConfig preset_config(const std::string& name);

// JSON config; missing fields keep their defaults. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Checks method/kernel compatibility. Throws ConfigError.
void validate_config(const ExperimentConfig& config);

// Kernel argument: a file in the plain-text kernel format, or an inline
// matrix such as "1,1;1,2".
Eigen::MatrixXd parse_kernel_argument(const std::string& text);

struct RunRow {
  std::string kernel_id;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  Method method = Method::newton;
  long long iterations = 0;
  std::string status;
  double ell_distance = 0.0;
  Eigen::MatrixXd estimate;
};

struct ExperimentResult {
  std::vector<RunRow> rows;
  nlohmann::json summary;
};

// One estimate from one batch.
RunRow run_single(const KernelSpec& kernel, Method method,
                  const SampleBatch& batch, const ExperimentConfig& config);

// Runs every (kernel, method, n, seed) cell in that nesting order.
ExperimentResult run_cells(const ExperimentConfig& config);

// run_cells plus runs.csv, summary.csv and summary.json under output_dir.
// Returns 0 when every cell finished; diverged estimates are rows, not
// failures. Throws ConfigError or IoError.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

// Header: kernel,n,seed,method,iterations,status,ell_distance,estimate
// where estimate lists row-major entries separated by ';'.
void write_runs_csv(std::ostream& out, const std::vector<RunRow>& rows);

enum class VerifyLevel { quick, full };

// Oracle suites with one PASS/FAIL line each. Returns 0 iff all pass.
int verify(VerifyLevel level, std::uint64_t seed, std::ostream& out);

}  // namespace dppmle

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dppmle/likelihood.hpp"
#include "dppmle/sampling.hpp"

namespace dppmle {

enum class SolverStatus { converged, max_iter, diverged, singular };

std::string to_string(SolverStatus status);

// Snapshots of a solver run. All lists share one length; an entry is only
// written for iterates where the objective is finite.
struct IterationTrace {
  std::vector<long long> iteration;
  std::vector<Eigen::MatrixXd> iterates;
  std::vector<double> objective;
  std::vector<double> grad_norms;
  SolverStatus status = SolverStatus::max_iter;
  long long iterations = 0;  // updates actually applied
  std::string message;       // why the run stopped early, if it did

  std::size_t size() const { return iteration.size(); }
};

struct SolverResult {
  Eigen::MatrixXd estimate;  // last valid iterate
  IterationTrace trace;
};

struct NewtonOptions {
  int max_iter = 100;
  double grad_tol = 1e-10;
  int trace_every = 1;
  // Step halving until the objective improves. Off by default: the plain
  // update is the one whose failure modes are being reproduced.
  bool damped = false;
  double blowup = 1e8;
};

// L <- L - H^{-1} vec(dPhi) on the row-major pair-index vector, followed by
// symmetrization. Stops on ||dPhi||_F <= grad_tol, a non-invertible Hessian
// (status singular), or an iterate outside the region where every supported
// minor is positive and entries stay below `blowup` (status diverged).
SolverResult newton_raphson(const LikelihoodContext& ctx,
                            const Eigen::MatrixXd& initial,
                            const NewtonOptions& options = {});

struct SgdOptions {
  double eta = 0.1;
  long long iters = 60000;
  std::uint64_t seed = 0;
  int trace_every = 100;
  double blowup = 1e8;
};

// One stochastic step: eta * ([L_J^{-1}]_padded - (L + I)^{-1}).
// Throws SingularPrincipalMinor if L_J or L + I is not invertible.
Eigen::MatrixXd sgd_update(const Eigen::MatrixXd& l, Mask subset, double eta);

// Each step picks one draw uniformly with replacement from the batch and
// applies sgd_update. A singular or nonpositive sampled minor, entries beyond
// `blowup`, or a traced iterate with -infinite objective ends the run with
// status diverged.
SolverResult sgd(const SampleBatch& batch, const Eigen::MatrixXd& initial,
                 const SgdOptions& options = {});

// Header `iter,objective,grad_norm`.
void write_trace_csv(std::ostream& out, const IterationTrace& trace);

}  // namespace dppmle

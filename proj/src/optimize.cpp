#include "dppmle/optimize.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "dppmle/error.hpp"

namespace dppmle {

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iter: return "max_iter";
    case SolverStatus::diverged: return "diverged";
    case SolverStatus::singular: return "singular";
  }
  return "unknown";
}

namespace {

Eigen::VectorXd vectorize(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXd v(n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) v(i * n + j) = m(i, j);
  return v;
}

Eigen::MatrixXd unvectorize(const Eigen::VectorXd& v, Eigen::Index n) {
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = v(i * n + j);
  return m;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

bool blown_up(const Eigen::MatrixXd& m, double bound) {
  return !m.allFinite() || m.cwiseAbs().maxCoeff() > bound;
}

void record(IterationTrace& trace, long long it, const Eigen::MatrixXd& l,
            double objective, double grad_norm) {
  trace.iteration.push_back(it);
  trace.iterates.push_back(l);
  trace.objective.push_back(objective);
  trace.grad_norms.push_back(grad_norm);
}

void check_initial(const Eigen::MatrixXd& initial, int n) {
  if (initial.rows() != n || initial.cols() != n) {
    throw InvalidArgument("initial kernel size does not match the data");
  }
  if ((initial - initial.transpose()).cwiseAbs().maxCoeff() > kSymmetrizeTol) {
    throw NotSymmetric("initial kernel is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(initial));
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("initial kernel must be positive definite");
  }
}

}  // namespace

SolverResult newton_raphson(const LikelihoodContext& ctx,
                            const Eigen::MatrixXd& initial,
                            const NewtonOptions& options) {
  const int n = ctx.ground_size();
  check_initial(initial, n);
  if (options.trace_every < 1) throw InvalidArgument("trace_every must be >= 1");

  SolverResult result{symmetrized(initial), {}};
  IterationTrace& trace = result.trace;
  Eigen::MatrixXd l = result.estimate;

  for (long long it = 0;; ++it) {
    const double objective = log_likelihood(ctx, l);
    if (!std::isfinite(objective)) {
      trace.status = SolverStatus::diverged;
      trace.message = "iterate left the positive-minor region";
      return result;
    }
    const GradientMatrix g = gradient(ctx, l);
    const double grad_norm = g.norm();
    result.estimate = l;
    const bool done = grad_norm <= options.grad_tol || it >= options.max_iter;
    if (it % options.trace_every == 0 || done) {
      record(trace, it, l, objective, grad_norm);
    }
    if (grad_norm <= options.grad_tol) {
      trace.status = SolverStatus::converged;
      return result;
    }
    if (it >= options.max_iter) {
      trace.status = SolverStatus::max_iter;
      return result;
    }

    const HessianMatrix h = hessian(ctx, l);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
    if (!lu.isInvertible()) {
      trace.status = SolverStatus::singular;
      trace.message = "pair-index Hessian is not invertible at iteration " +
                      std::to_string(it);
      return result;
    }
    const Eigen::MatrixXd step = unvectorize(lu.solve(vectorize(g)), n);
    Eigen::MatrixXd next = symmetrized(l - step);
    if (options.damped) {
      double scale = 1.0;
      for (int halving = 0; halving < 40; ++halving) {
        const double value = log_likelihood(ctx, next);
        if (std::isfinite(value) && value >= objective) break;
        scale *= 0.5;
        next = symmetrized(l - scale * step);
      }
    }
    if (blown_up(next, options.blowup)) {
      trace.status = SolverStatus::diverged;
      trace.message = "entries exceeded the blow-up bound";
      return result;
    }
    l = std::move(next);
    trace.iterations = it + 1;
  }
}

Eigen::MatrixXd sgd_update(const Eigen::MatrixXd& l, Mask subset, double eta) {
  const Eigen::Index n = l.rows();
  Eigen::FullPivLU<Eigen::MatrixXd> shifted(
      l + Eigen::MatrixXd::Identity(n, n));
  if (!shifted.isInvertible()) {
    throw SingularPrincipalMinor("L + I is singular", 0);
  }
  Eigen::MatrixXd update = -shifted.inverse();
  if (subset != 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> minor(principal_submatrix(l, subset));
    if (!minor.isInvertible()) {
      throw SingularPrincipalMinor(
          "sampled minor on mask " + std::to_string(subset) + " is singular",
          subset);
    }
    update += embed_principal(minor.inverse(), subset, static_cast<int>(n));
  }
  return eta * update;
}

SolverResult sgd(const SampleBatch& batch, const Eigen::MatrixXd& initial,
                 const SgdOptions& options) {
  if (batch.draws.empty()) throw EmptyBatch("sgd needs a nonempty batch");
  if (!(options.eta > 0.0)) throw InvalidArgument("eta must be positive");
  if (options.trace_every < 1) throw InvalidArgument("trace_every must be >= 1");
  const int n = batch.n_ground;
  check_initial(initial, n);

  const LikelihoodContext ctx(empirical_distribution(batch));
  Rng rng = make_rng(options.seed);
  SolverResult result{symmetrized(initial), {}};
  IterationTrace& trace = result.trace;
  Eigen::MatrixXd l = result.estimate;
  trace.status = SolverStatus::max_iter;

  auto checkpoint = [&](long long it) {
    const double objective = log_likelihood(ctx, l);
    if (!std::isfinite(objective)) return false;
    record(trace, it, l, objective, gradient(ctx, l).norm());
    return true;
  };

  if (!checkpoint(0)) {
    trace.status = SolverStatus::diverged;
    trace.message = "initial kernel has a nonpositive supported minor";
    return result;
  }
  for (long long it = 1; it <= options.iters; ++it) {
    const Mask pick = batch.draws[uniform_index(rng, batch.size())];
    if (pick != 0 && !(principal_minor_det(l, pick) > 0.0)) {
      trace.status = SolverStatus::diverged;
      trace.message = "sampled minor became nonpositive at step " +
                      std::to_string(it);
      return result;
    }
    Eigen::MatrixXd next;
    try {
      next = l + sgd_update(l, pick, options.eta);
    } catch (const SingularPrincipalMinor& e) {
      trace.status = SolverStatus::diverged;
      trace.message = e.what();
      return result;
    }
    if (blown_up(next, options.blowup)) {
      trace.status = SolverStatus::diverged;
      trace.message = "entries exceeded the blow-up bound";
      return result;
    }
    l = symmetrized(next);
    trace.iterations = it;
    if (it % options.trace_every == 0 || it == options.iters) {
      if (!checkpoint(it)) {
        trace.status = SolverStatus::diverged;
        trace.message = "objective became -inf at step " + std::to_string(it);
        return result;
      }
      result.estimate = l;
    }
  }
  result.estimate = l;
  return result;
}

void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
  out << "iter,objective,grad_norm\n" << std::setprecision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << trace.iteration[i] << ',' << trace.objective[i] << ','
        << trace.grad_norms[i] << '\n';
  }
}

}  // namespace dppmle

#include "dppmle/numdiff.hpp"

#include <cmath>

namespace dppmle {

namespace {

Eigen::MatrixXd direction(Eigen::Index n, Eigen::Index k, Eigen::Index l) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  if (k == l) {
    e(k, k) = 1.0;
  } else {
    e(k, l) = 0.5;
    e(l, k) = 0.5;
  }
  return e;
}

}  // namespace

Eigen::MatrixXd symmetric_fd_gradient(
    const std::function<double(const Eigen::MatrixXd&)>& f,
    const Eigen::MatrixXd& at, double rel_step) {
  const Eigen::Index n = at.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = k; l < n; ++l) {
      const double h = rel_step * (1.0 + std::abs(at(k, l)));
      const Eigen::MatrixXd e = direction(n, k, l);
      const double d = (f(at + h * e) - f(at - h * e)) / (2.0 * h);
      g(k, l) = d;
      g(l, k) = d;
    }
  }
  return g;
}

Eigen::MatrixXd symmetric_fd_jacobian(
    const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& f,
    const Eigen::MatrixXd& at, double rel_step) {
  const Eigen::Index n = at.rows();
  Eigen::MatrixXd jac(n * n, n * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      const double h = rel_step * (1.0 + std::abs(at(k, l)));
      const Eigen::MatrixXd e = direction(n, k, l);
      const Eigen::MatrixXd d = (f(at + h * e) - f(at - h * e)) / (2.0 * h);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) jac(i * n + j, k * n + l) = d(i, j);
    }
  }
  return jac;
}

Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& at, double step) {
  const Eigen::Index d = at.size();
  Eigen::MatrixXd h(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      Eigen::VectorXd pp = at, pm = at, mp = at, mm = at;
      pp(i) += step; pp(j) += step;
      pm(i) += step; pm(j) -= step;
      mp(i) -= step; mp(j) += step;
      mm(i) -= step; mm(j) -= step;
      const double v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step * step);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

}  // namespace dppmle

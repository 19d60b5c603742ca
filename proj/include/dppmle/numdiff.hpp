#pragma once

#include <functional>

#include <Eigen/Dense>

namespace dppmle {

// Central differences over symmetric matrices. Diagonal entries move by
// +-h; an off-diagonal pair (i, j), (j, i) moves together by +-h/2 each, so
// entry (i, j) of the result estimates the partial derivative with respect to
// the single coordinate L_ij. h = rel_step * (1 + |L_ij|).
Eigen::MatrixXd symmetric_fd_gradient(
    const std::function<double(const Eigen::MatrixXd&)>& f,
    const Eigen::MatrixXd& at, double rel_step = 1e-5);

// Derivative of a matrix-valued map along the symmetric direction
// (E_kl + E_lk) / 2 (E_kk for k == l), as a pair-index column. Column
// k * N + l of the result pairs with Hessian column k * N + l averaged with
// column l * N + k.
Eigen::MatrixXd symmetric_fd_jacobian(
    const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& f,
    const Eigen::MatrixXd& at, double rel_step = 1e-5);

// Central-difference Hessian of a scalar function of a plain vector.
Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& at, double step = 1e-4);

}  // namespace dppmle

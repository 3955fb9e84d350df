#pragma once

#include <Eigen/Dense>

namespace mdm {

/// Numerical rank tolerance: max(rows, cols) * eps * sigma_max.
double rank_tolerance(Eigen::Index rows, Eigen::Index cols, double sigma_max);

/// Moore-Penrose pseudo-inverse by SVD with the standard rank tolerance.
/// If achieved_rank is non-null it receives the numerical rank.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, int* achieved_rank = nullptr);

/// Pseudo-inverse of a symmetric matrix via its eigendecomposition.
Eigen::MatrixXd pinv_symmetric(const Eigen::MatrixXd& m);

} // namespace mdm

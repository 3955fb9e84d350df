#pragma once

#include <Eigen/Dense>

namespace mdm {

/// Second-moment structure of two stacked noise vectors lag j apart. Each
/// stacked vector is [w_0..w_{P-2}; v_0..v_{P-1}] built from white,
/// mutually independent noise sequences with covariances Q and R, so the
/// diagonal block is blkdiag(I_{P-1} (x) Q, I_P (x) R) and the cross block
/// carries Q/R on the overlap shift; it vanishes for j >= P.
struct JointNoiseCov {
    Eigen::MatrixXd self;  ///< cov of one stacked vector
    Eigen::MatrixXd cross; ///< E[stack_k stack_{k+j}^T]
};

JointNoiseCov joint_noise_cov(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int P,
                              int j);

/// E[(x (x) x)(y (x) y)^T] for jointly zero-mean Gaussian (x, y) with the
/// given covariance blocks (Isserlis). Entry at row a*dim_x+b, column
/// c*dim_y+d is Sxx(a,b) Syy(c,d) + Sxy(a,c) Sxy(b,d) + Sxy(a,d) Sxy(b,c).
Eigen::MatrixXd gaussian_quartic(const Eigen::MatrixXd& Sxx, const Eigen::MatrixXd& Syy,
                                 const Eigen::MatrixXd& Sxy);

/// Lag-j covariance of the quadratic regression error process
/// eta_k = stack_k^{(x)2} - E[stack^{(x)2}], returned in matrix form as
/// E[eta_{k+j} eta_k^T] (dimension m^2 x m^2 with m the stacked noise
/// length). Identically zero for j >= P; j = 0 gives the symmetric PSD
/// self-covariance.
Eigen::MatrixXd eta_cov(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int P, int j);

} // namespace mdm

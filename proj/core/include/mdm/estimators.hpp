#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mdm/model.hpp"
#include "mdm/stack_ops.hpp"
#include "mdm/vec_maps.hpp"

namespace mdm {

/// One residual window of the least-squares system: the observed unique
/// second moments of the residual, the design row block mapping the unique
/// (Q, R) entries to them, and the shaping block that maps the quadratic
/// noise error process into the equation error.
struct RegressionBlock {
    int k = 0;
    Eigen::VectorXd obs;     ///< unique entries of residual (x) residual
    Eigen::MatrixXd design;  ///< rows x n_params
    Eigen::MatrixXd shaping; ///< rows x noise_dim^2
    int rows() const { return static_cast<int>(obs.size()); }
};

/// The stacked system over all admissible windows k = N .. tau-L+1.
struct RegressionSystem {
    int L = 0;
    int N = 0;
    int P = 0;
    int noise_dim = 0; ///< (P-1) n_w + P n_v
    UniqueCovMap params{0, 0};
    std::vector<RegressionBlock> blocks;
    std::vector<int> offsets; ///< size blocks+1; row offset of each block in the stack
    Eigen::MatrixXd stacked_design;
    Eigen::VectorXd stacked_obs;
    int total_rows() const { return offsets.empty() ? 0 : offsets.back(); }
};

/// Residual at window k from measurements and controls.
Eigen::VectorXd residual(const ResidualKernel& kernel, const std::vector<Eigen::VectorXd>& z,
                         const std::vector<Eigen::VectorXd>& u);
Eigen::VectorXd residual(const LtvModel& model, const Trajectory& data, int k, int L, int N);

/// Same residual evaluated from the recorded noises; equal to the
/// data route up to roundoff and used as a consistency oracle.
Eigen::VectorXd residual_from_noises(const ResidualKernel& kernel,
                                     const std::vector<Eigen::VectorXd>& w,
                                     const std::vector<Eigen::VectorXd>& v);

RegressionSystem build_regression(const LtvModel& model, const Trajectory& data, int L, int N);

struct EstimateReport {
    std::string method;
    Eigen::VectorXd estimate;
    Eigen::MatrixXd Q_hat;
    Eigen::MatrixXd R_hat;
    Eigen::MatrixXd est_cov; ///< reported estimate covariance; empty for recursive methods
    double seconds = 0.0;    ///< wall-clock of the estimator call
    Eigen::VectorXd est_cov_diag() const {
        return est_cov.size() ? est_cov.diagonal() : Eigen::VectorXd();
    }
};

/// Ordinary least squares on the stacked system; reported covariance is
/// (design^T design)^{-1}, which ignores the noise scale (and is known to
/// badly understate the spread).
EstimateReport estimate_unweighted(const RegressionSystem& sys);

/// Per-block weight matrices shaping * shaping^T of the semi-weighted method.
std::vector<Eigen::MatrixXd> build_S2(const RegressionSystem& sys);

/// Weighted least squares with the block-diagonal weight build_S2, using a
/// symmetric-eigendecomposition pseudo-inverse on singular blocks.
EstimateReport estimate_semiweighted(const RegressionSystem& sys);

/// Banded covariance of the stacked equation error for Gaussian noises with
/// the given (estimated) Q, R. Blocks farther than P-1 windows apart are
/// exactly zero and never formed.
Eigen::SparseMatrix<double> build_P2(const RegressionSystem& sys, const Eigen::MatrixXd& Q,
                                     const Eigen::MatrixXd& R);

/// Generalized least squares with an explicit stacked-error covariance
/// (solved via a sparse factorization, never an explicit inverse). The
/// matrix is symmetrized and, if the factorization fails, jittered by
/// escalating multiples of 1e-10 times the mean diagonal.
EstimateReport estimate_weighted_given(const RegressionSystem& sys,
                                       const Eigen::SparseMatrix<double>& error_cov,
                                       const std::string& method_name = "we-nr");

/// Full weighted estimate: builds the error covariance from the seed
/// estimate (sequential technique) and solves.
EstimateReport estimate_weighted(const RegressionSystem& sys, const EstimateReport& seed);

/// Optional eigenvalue clipping of Q_hat / R_hat onto the PSD cone; the
/// packed estimate vector is updated to match.
EstimateReport project_psd(const EstimateReport& report, const UniqueCovMap& params);

} // namespace mdm

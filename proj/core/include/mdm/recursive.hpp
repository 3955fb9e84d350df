#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mdm/estimators.hpp"

namespace mdm {

enum class RlsWeighting {
    unweighted,   ///< per-step weight is the identity
    semiweighted, ///< per-step weight is shaping * shaping^T
};

/// State of the generalized recursive least-squares estimator.
struct RlsState {
    Eigen::VectorXd estimate;
    Eigen::MatrixXd covariance; ///< symmetric PSD, re-symmetrized each step
    RlsWeighting weighting = RlsWeighting::unweighted;
    int steps = 0;
};

RlsState rls_init(const Eigen::VectorXd& estimate0, const Eigen::MatrixXd& sigma0,
                  RlsWeighting weighting);

/// One update with a window's observation, design and shaping blocks. The
/// inner gain solve falls back to a symmetric pseudo-inverse when the
/// innovation covariance is singular.
void rls_step(RlsState& state, const Eigen::VectorXd& obs, const Eigen::MatrixXd& design,
              const Eigen::MatrixXd& shaping);

struct RlsRun {
    std::vector<Eigen::VectorXd> trace; ///< estimate after each step, in time order
    RlsState state;
    EstimateReport report; ///< final estimate; est_cov left empty
};

/// Runs the recursion over the blocks of a prebuilt system in increasing k.
RlsRun rls_run(const RegressionSystem& sys, const RlsState& init);

/// Convenience: builds the regression system from data, then runs.
RlsRun rls_run(const LtvModel& model, const Trajectory& data, int L, int N,
               const RlsState& init);

} // namespace mdm

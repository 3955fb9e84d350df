#include "mdm/recursive.hpp"

#include <chrono>

#include "mdm/errors.hpp"
#include "mdm/linalg.hpp"

namespace mdm {

RlsState rls_init(const Eigen::VectorXd& estimate0, const Eigen::MatrixXd& sigma0,
                  RlsWeighting weighting) {
    if (sigma0.rows() != estimate0.size() || sigma0.cols() != estimate0.size())
        throw DimensionError("recursive: prior covariance dimension mismatch");
    if (!sigma0.isApprox(sigma0.transpose(), 1e-12))
        throw DimensionError("recursive: prior covariance not symmetric");
    RlsState state;
    state.estimate = estimate0;
    state.covariance = sigma0;
    state.weighting = weighting;
    state.steps = 0;
    return state;
}

void rls_step(RlsState& state, const Eigen::VectorXd& obs, const Eigen::MatrixXd& design,
              const Eigen::MatrixXd& shaping) {
    const Eigen::Index rows = obs.size();
    const Eigen::Index p = state.estimate.size();
    if (design.rows() != rows || design.cols() != p)
        throw DimensionError("recursive: design block dimension mismatch at step " +
                             std::to_string(state.steps));

    Eigen::MatrixXd innovation_cov = design * state.covariance * design.transpose();
    if (state.weighting == RlsWeighting::unweighted) {
        innovation_cov.diagonal().array() += 1.0;
    } else {
        if (shaping.rows() != rows)
            throw DimensionError("recursive: shaping block dimension mismatch at step " +
                                 std::to_string(state.steps));
        innovation_cov.noalias() += shaping * shaping.transpose();
    }

    const Eigen::MatrixXd cross = state.covariance * design.transpose();
    Eigen::MatrixXd gain;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(innovation_cov);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() >
            rank_tolerance(rows, rows, ldlt.vectorD().cwiseAbs().maxCoeff())) {
        gain = ldlt.solve(cross.transpose()).transpose();
    } else {
        gain = cross * pinv_symmetric(innovation_cov);
    }

    state.estimate += gain * (obs - design * state.estimate);
    state.covariance -= gain * design * state.covariance;
    state.covariance = 0.5 * (state.covariance + state.covariance.transpose()).eval();
    ++state.steps;
}

RlsRun rls_run(const RegressionSystem& sys, const RlsState& init) {
    const auto start = std::chrono::steady_clock::now();
    RlsRun run;
    run.state = init;
    run.trace.reserve(sys.blocks.size());
    for (const auto& block : sys.blocks) {
        rls_step(run.state, block.obs, block.design, block.shaping);
        run.trace.push_back(run.state.estimate);
    }
    run.report.method =
        init.weighting == RlsWeighting::unweighted ? "uw-re" : "sw-re";
    run.report.estimate = run.state.estimate;
    auto [q, r] = sys.params.unpack(run.state.estimate);
    run.report.Q_hat = std::move(q);
    run.report.R_hat = std::move(r);
    run.report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

RlsRun rls_run(const LtvModel& model, const Trajectory& data, int L, int N,
               const RlsState& init) {
    return rls_run(build_regression(model, data, L, N), init);
}

} // namespace mdm

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mdm {

/// Linear time-varying state-space model
///
///   x_{k+1} = F_k x_k + G_k u_k + E_k w_k      k = 0..tau-1
///   z_k     = H_k x_k + D_k v_k                k = 0..tau
///
/// The measurement dimension n_z(k) and the control dimension n_u(k) may
/// change from step to step (e.g. sensors dropping in and out); the state,
/// state-noise and measurement-noise dimensions are fixed.
///
/// Declared per-step dimensions are stored separately from the matrices so
/// that validate() can report shape mismatches instead of asserting.
struct LtvModel {
    int n_x = 0;
    int n_w = 0;
    int n_v = 0;

    std::vector<int> n_z; ///< length tau+1
    std::vector<int> n_u; ///< length tau; entries may be 0 (no control that step)

    std::vector<Eigen::MatrixXd> F; ///< k = 0..tau-1, n_x x n_x
    std::vector<Eigen::MatrixXd> G; ///< k = 0..tau-1, n_x x n_u(k)
    std::vector<Eigen::MatrixXd> E; ///< k = 0..tau-1, n_x x n_w
    std::vector<Eigen::MatrixXd> H; ///< k = 0..tau,   n_z(k) x n_x
    std::vector<Eigen::MatrixXd> D; ///< k = 0..tau,   n_z(k) x n_v

    int tau() const { return static_cast<int>(F.size()); }
};

/// Fills in the declared dimension sequences from the supplied matrices.
LtvModel make_model(int n_x, int n_w, int n_v,
                    std::vector<Eigen::MatrixXd> F, std::vector<Eigen::MatrixXd> G,
                    std::vector<Eigen::MatrixXd> E, std::vector<Eigen::MatrixXd> H,
                    std::vector<Eigen::MatrixXd> D);

struct NoiseSpec {
    Eigen::MatrixXd Q; ///< n_w x n_w, symmetric
    Eigen::MatrixXd R; ///< n_v x n_v, symmetric
};

struct Trajectory {
    std::vector<Eigen::VectorXd> x; ///< states x_0..x_tau
    std::vector<Eigen::VectorXd> z; ///< measurements z_0..z_tau
    std::vector<Eigen::VectorXd> u; ///< controls u_0..u_{tau-1}
    std::vector<Eigen::VectorXd> w; ///< drawn state noises w_0..w_{tau-1}
    std::vector<Eigen::VectorXd> v; ///< drawn measurement noises v_0..v_tau
};

struct ValidationIssue {
    int k;
    std::string what;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

/// Checks every per-step matrix against the declared dimensions and for
/// finiteness. Report-style: never throws.
ValidationReport validate(const LtvModel& model);

/// Column stack [H_k; H_{k+1}F_k; ...; H_{k+depth-1} F_{k+depth-2}...F_k].
/// Requires k + depth - 1 <= tau.
Eigen::MatrixXd observability_stack(const LtvModel& model, int k, int depth);

/// True at position k iff the depth-window observability stack starting at k
/// has full column rank n_x. Rank via singular values above
/// max(rows,cols)*eps*sigma_max. One entry per k = 0..tau-depth+1.
std::vector<bool> check_observability(const LtvModel& model, int depth);

/// Simulates the model with x_0 ~ N(x0_mean, x0_var), w_k ~ N(0,Q),
/// v_k ~ N(0,R), all drawn from one seeded generator, and records the
/// noises. Re-running with the same seed reproduces the trajectory exactly.
Trajectory simulate(const LtvModel& model, const NoiseSpec& noise,
                    const Eigen::VectorXd& x0_mean, const Eigen::MatrixXd& x0_var,
                    const std::vector<Eigen::VectorXd>& controls, std::uint64_t seed);

} // namespace mdm

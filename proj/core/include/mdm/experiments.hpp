#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdm/estimators.hpp"
#include "mdm/model.hpp"

namespace mdm {

enum class Method { uw_nr, sw_nr, we_nr, uw_re, sw_re };

std::string method_name(Method m);
Method parse_method(const std::string& name);

/// A ready-to-run identification scenario: model, true noise covariances,
/// control sequence, window parameters and recursive initialization.
struct Scenario {
    LtvModel model;
    NoiseSpec noise;
    std::vector<Eigen::VectorXd> controls;
    int L = 1;
    int N = 1;
    Eigen::VectorXd x0_mean;
    Eigen::MatrixXd x0_var;
    Eigen::VectorXd rls_init_estimate;
    Eigen::MatrixXd rls_init_cov;
};

/// Scalar model with slowly varying dynamics and a rapidly oscillating
/// measurement gain; u_k = sin(k/tau). Q = 2, R = 1, L = N = 1.
Scenario builtin_model_1(int tau);

/// Scalar-state model with two sensors whose availability changes over the
/// run: one sensor in the first third, the other in the second, both in the
/// last. Q = 3, R = [[2,-1],[-1,1]], L = 2, N = 1.
Scenario builtin_model_2(int tau);

/// Loads a scenario from a JSON model file (explicit per-step or constant
/// matrices). See README for the schema.
Scenario load_scenario(const std::string& path);

struct ExperimentConfig {
    std::string model = "builtin-1"; ///< "builtin-1", "builtin-2" or a model-file path
    int tau = 1000;
    int mc_runs = 200;
    std::uint64_t seed = 1;
    std::optional<int> L; ///< default: scenario value
    std::optional<int> N;
    std::vector<Method> methods; ///< empty: scenario-appropriate default
    Method we_seed = Method::uw_nr;
    std::optional<Eigen::VectorXd> rls_init_estimate;
    std::optional<Eigen::MatrixXd> rls_init_cov;
    std::string out_dir = "mdm-out";
    bool full_scale = false; ///< overrides mc_runs with 10^4
    bool psd_projection = false;
    int threads = 0; ///< 0: hardware concurrency
    int timing_repeats = 5;
};

/// Parses a JSON experiment config document. See README for the schema.
ExperimentConfig load_config(const std::string& path);

struct ResultRow {
    Method method;
    std::string parameter;
    double true_value = 0.0;
    double sample_mean = 0.0;
    double sample_cov = 0.0;  ///< NaN with fewer than 2 runs
    double est_cov_mean = 0.0; ///< NaN for recursive methods
    double time_rel = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<std::string> parameter_labels;
    double uw_nr_seconds = 0.0; ///< absolute timing baseline (median)
};

struct SummaryStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd cov_diag; ///< unbiased (n-1) sample covariance diagonal
};

/// Sample mean and covariance diagonal across Monte-Carlo estimates.
/// Throws DataError when a covariance is requested from fewer than 2 runs.
SummaryStats summarize(const std::vector<Eigen::VectorXd>& estimates);

/// Runs the Monte-Carlo experiment and writes results.csv, estimates.csv,
/// trace.csv and manifest.json into the configured output directory.
ResultTable run_experiment(const ExperimentConfig& config);

} // namespace mdm

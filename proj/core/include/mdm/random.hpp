#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mdm {

/// Derives a child seed from a master seed and a stream index (splitmix64
/// finalizer). Gives every Monte-Carlo run its own generator so runs can
/// execute in parallel without sharing state, and the result does not
/// depend on scheduling.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded standard-normal source. Uses an explicit Box-Muller transform on
/// top of mt19937_64 so the draw sequence is fixed by the seed alone, not
/// by the standard library's distribution implementation.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : gen_(seed) {}

    double next();

    /// Vector of iid standard normals.
    Eigen::VectorXd next_vector(Eigen::Index n);

private:
    double uniform01();

    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Symmetric square root of a positive semi-definite matrix, used to shape
/// standard-normal draws. Eigenvalues below -tol*max raise NotPsdError;
/// small negative ones are clamped to zero so exactly-singular covariances
/// (e.g. Q = 0) sample cleanly.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what);

} // namespace mdm

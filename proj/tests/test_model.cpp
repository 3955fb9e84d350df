#include <doctest.h>

#include <cmath>

#include "mdm/errors.hpp"
#include "mdm/experiments.hpp"
#include "mdm/model.hpp"
#include "test_helpers.hpp"

using namespace mdm;
using mdm_test::constant_scalar_model;
using mdm_test::zero_controls;

TEST_SUITE("model") {

TEST_CASE("validate accepts a consistent scalar model") {
    const LtvModel model = constant_scalar_model(10, 0.8, 1.0);
    CHECK(validate(model).ok());
}

TEST_CASE("validate reports a shape mismatch with its time index") {
    LtvModel model = constant_scalar_model(10, 0.8, 1.0);
    model.n_z[5] = 2; // declared 2x1, provided 1x1
    const auto report = validate(model);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& issue : report.issues)
        if (issue.k == 5 && issue.what.find("H") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("validate reports non-finite entries") {
    LtvModel model = constant_scalar_model(10, 0.8, 1.0);
    model.G[3](0, 0) = std::nan("");
    const auto report = validate(model);
    REQUIRE_FALSE(report.ok());
    CHECK(report.issues.front().k == 3);
    CHECK(report.issues.front().what.find("non-finite") != std::string::npos);
}

TEST_CASE("observability stack expands H and F products") {
    const LtvModel model = constant_scalar_model(10, 0.8, 1.0);
    const Eigen::MatrixXd stack = observability_stack(model, 2, 2);
    REQUIRE(stack.rows() == 2);
    CHECK(stack(0, 0) == doctest::Approx(1.0));
    CHECK(stack(1, 0) == doctest::Approx(0.8));

    CHECK(observability_stack(model, 4, 1).isApprox(model.H[4]));
    CHECK_THROWS_AS(observability_stack(model, 10, 3), DataError);
}

TEST_CASE("rank-deficient stack is detected") {
    // H = [1 0] with F = I never sees the second state.
    std::vector<Eigen::MatrixXd> F(6, Eigen::MatrixXd::Identity(2, 2));
    std::vector<Eigen::MatrixXd> G(6, Eigen::MatrixXd::Zero(2, 0));
    std::vector<Eigen::MatrixXd> E(6, Eigen::MatrixXd::Identity(2, 2));
    std::vector<Eigen::MatrixXd> H(7, (Eigen::MatrixXd(1, 2) << 1.0, 0.0).finished());
    std::vector<Eigen::MatrixXd> D(7, Eigen::MatrixXd::Identity(1, 1));
    const LtvModel model = make_model(2, 2, 1, F, G, E, H, D);

    const Eigen::MatrixXd stack = observability_stack(model, 0, 2);
    CHECK(stack.isApprox((Eigen::MatrixXd(2, 2) << 1, 0, 1, 0).finished()));
    for (bool ok : check_observability(model, 2)) CHECK_FALSE(ok);
}

TEST_CASE("scalar and builtin-2 models are observable") {
    const LtvModel scalar = constant_scalar_model(12, 0.8, 1.0);
    for (bool ok : check_observability(scalar, 1)) CHECK(ok);

    const Scenario two = builtin_model_2(60);
    for (bool ok : check_observability(two.model, 2)) CHECK(ok);
}

TEST_CASE("zero-noise simulation hits the deterministic fixed point") {
    LtvModel model = constant_scalar_model(20, 1.0, 1.0);
    for (int k = 0; k <= 20; ++k) model.H[k](0, 0) = 1.0 + 0.1 * k;
    const NoiseSpec zero{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    const auto traj = simulate(model, zero, Eigen::VectorXd::Ones(1),
                               Eigen::MatrixXd::Zero(1, 1), zero_controls(model), 3);
    for (int k = 0; k <= 20; ++k) {
        CHECK(traj.x[k](0) == doctest::Approx(1.0));
        CHECK(traj.z[k](0) == doctest::Approx(model.H[k](0, 0)));
    }
}

TEST_CASE("zero-noise simulation decays geometrically") {
    const LtvModel model = constant_scalar_model(16, 0.5, 1.0);
    const NoiseSpec zero{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    const auto traj = simulate(model, zero, Eigen::VectorXd::Ones(1),
                               Eigen::MatrixXd::Zero(1, 1), zero_controls(model), 3);
    for (int k = 0; k <= 16; ++k) CHECK(traj.z[k](0) == doctest::Approx(std::pow(0.5, k)));
}

TEST_CASE("drawn state noise is zero-mean at Monte-Carlo scale") {
    const int tau = 10000;
    const LtvModel model = constant_scalar_model(tau, 0.8, 1.0);
    NoiseSpec noise;
    noise.Q = 2.0 * Eigen::MatrixXd::Identity(1, 1);
    noise.R = Eigen::MatrixXd::Identity(1, 1);
    const auto traj = simulate(model, noise, Eigen::VectorXd::Ones(1),
                               Eigen::MatrixXd::Identity(1, 1), zero_controls(model), 11);
    double mean = 0.0;
    for (const auto& w : traj.w) mean += w(0);
    mean /= tau;
    CHECK(std::abs(mean) < 3.0 * std::sqrt(2.0) / std::sqrt(static_cast<double>(tau)));
}

TEST_CASE("same seed reproduces the trajectory exactly") {
    const Scenario s = builtin_model_1(50);
    const auto a = simulate(s.model, s.noise, s.x0_mean, s.x0_var, s.controls, 99);
    const auto b = simulate(s.model, s.noise, s.x0_mean, s.x0_var, s.controls, 99);
    for (int k = 0; k <= 50; ++k) CHECK(a.z[k] == b.z[k]);
    const auto c = simulate(s.model, s.noise, s.x0_mean, s.x0_var, s.controls, 100);
    CHECK(a.z[1] != c.z[1]);
}

TEST_CASE("recorded noises satisfy both model equations to machine precision") {
    const Scenario s = builtin_model_1(100);
    const auto traj = simulate(s.model, s.noise, s.x0_mean, s.x0_var, s.controls, 5);
    for (int k = 0; k <= 100; ++k) {
        const Eigen::VectorXd meas_gap =
            traj.z[k] - s.model.H[k] * traj.x[k] - s.model.D[k] * traj.v[k];
        CHECK(meas_gap.cwiseAbs().maxCoeff() < 1e-14);
        if (k < 100) {
            const Eigen::VectorXd state_gap = traj.x[k + 1] - s.model.F[k] * traj.x[k] -
                                              s.model.G[k] * traj.u[k] -
                                              s.model.E[k] * traj.w[k];
            CHECK(state_gap.cwiseAbs().maxCoeff() < 1e-14);
        }
    }
}

TEST_CASE("sample covariance of drawn noise matches Q over a long run") {
    const int tau = 100000;
    std::vector<Eigen::MatrixXd> F(tau, Eigen::MatrixXd::Zero(1, 1));
    std::vector<Eigen::MatrixXd> G(tau, Eigen::MatrixXd::Zero(1, 0));
    std::vector<Eigen::MatrixXd> E(tau, (Eigen::MatrixXd(1, 2) << 1.0, 0.5).finished());
    std::vector<Eigen::MatrixXd> H(tau + 1, Eigen::MatrixXd::Identity(1, 1));
    std::vector<Eigen::MatrixXd> D(tau + 1, Eigen::MatrixXd::Identity(1, 1));
    const LtvModel model = make_model(1, 2, 1, F, G, E, H, D);
    NoiseSpec noise;
    noise.Q = (Eigen::MatrixXd(2, 2) << 2.0, -1.0, -1.0, 1.0).finished();
    noise.R = Eigen::MatrixXd::Identity(1, 1);
    const auto traj = simulate(model, noise, Eigen::VectorXd::Zero(1),
                               Eigen::MatrixXd::Zero(1, 1), zero_controls(model), 21);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
    for (const auto& w : traj.w) cov += w * w.transpose();
    cov /= tau;
    const double tol = 5.0 * noise.Q.norm() / std::sqrt(static_cast<double>(tau));
    CHECK(((cov - noise.Q).cwiseAbs().maxCoeff()) < tol);
}

TEST_CASE("simulate rejects indefinite covariances") {
    const LtvModel model = constant_scalar_model(5, 0.8, 1.0);
    NoiseSpec bad;
    bad.Q = -Eigen::MatrixXd::Identity(1, 1);
    bad.R = Eigen::MatrixXd::Identity(1, 1);
    CHECK_THROWS_AS(simulate(model, bad, Eigen::VectorXd::Zero(1),
                             Eigen::MatrixXd::Identity(1, 1), zero_controls(model), 1),
                    NotPsdError);
}

} // TEST_SUITE

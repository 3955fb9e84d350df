#include <doctest.h>

#include <cmath>

#include "mdm/errors.hpp"
#include "mdm/estimators.hpp"
#include "mdm/experiments.hpp"
#include "mdm/linalg.hpp"
#include "mdm/stack_ops.hpp"
#include "test_helpers.hpp"

using namespace mdm;
using mdm_test::alternating_dim_model;
using mdm_test::constant_scalar_model;
using mdm_test::zero_controls;

namespace {

/// Max over k of the relative gap between the data route and the
/// recorded-noise route of the residual.
double max_residual_gap(const LtvModel& model, const Trajectory& traj, int L, int N) {
    double worst = 0.0;
    for (int k = N; k <= model.tau() - L + 1; ++k) {
        const ResidualKernel kernel = build_kernel(model, k, L, N);
        const Eigen::VectorXd from_data = residual(kernel, traj.z, traj.u);
        const Eigen::VectorXd from_noise = residual_from_noises(kernel, traj.w, traj.v);
        const double scale = std::max(from_noise.norm(), 1e-12);
        worst = std::max(worst, (from_data - from_noise).norm() / scale);
    }
    return worst;
}

} // namespace

TEST_SUITE("stack_ops") {

TEST_CASE("transition product order and degenerate cases") {
    const LtvModel scalar = constant_scalar_model(10, 0.8, 1.0);
    CHECK(transition_product(scalar, 3, 0).isIdentity(0.0));
    CHECK(transition_product(scalar, 2, 3)(0, 0) == doctest::Approx(0.512));

    // Alternating 2x2 coefficients: the product must apply the later step on
    // the left.
    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 1, 1, 0, 1;
    b << 1, 0, 2, 1;
    std::vector<Eigen::MatrixXd> F = {a, b, a, b};
    std::vector<Eigen::MatrixXd> G(4, Eigen::MatrixXd::Zero(2, 0));
    std::vector<Eigen::MatrixXd> E(4, Eigen::MatrixXd::Identity(2, 2));
    std::vector<Eigen::MatrixXd> H(5, Eigen::MatrixXd::Identity(2, 2));
    std::vector<Eigen::MatrixXd> D(5, Eigen::MatrixXd::Identity(2, 2));
    const LtvModel model = make_model(2, 2, 2, F, G, E, H, D);
    CHECK(transition_product(model, 0, 2).isApprox(b * a));
    CHECK_THROWS_AS(transition_product(model, 3, 2), DataError);
}

TEST_CASE("observability stack doubles as the augmented measurement map") {
    const LtvModel scalar = constant_scalar_model(10, 0.8, 1.0);
    CHECK(observability_stack(scalar, 4, 1).isApprox(scalar.H[4]));
    const Eigen::MatrixXd o2 = observability_stack(scalar, 4, 2);
    CHECK(o2(0, 0) == doctest::Approx(1.0));
    CHECK(o2(1, 0) == doctest::Approx(0.8));

    // Regime with two sensors: re-evaluate block by block.
    const Scenario two = builtin_model_2(30);
    const int k = 25;
    const Eigen::MatrixXd stack = observability_stack(two.model, k, 2);
    REQUIRE(stack.rows() == 4);
    CHECK(stack.topRows(2).isApprox(two.model.H[k]));
    CHECK(stack.bottomRows(2).isApprox(two.model.H[k + 1] * two.model.F[k]));
}

TEST_CASE("window operators collapse for L = 1") {
    const LtvModel scalar = constant_scalar_model(10, 0.8, 1.0);
    CHECK(input_response(scalar, 3, 1).cols() == 0);
    CHECK(control_block_diag(scalar, 3, 0).cols() == 0);
    CHECK(state_noise_block_diag(scalar, 3, 0).rows() == 0);
    CHECK(meas_noise_block_diag(scalar, 3, 1).isApprox(scalar.D[3]));
}

TEST_CASE("input response matches the hand expansion for a scalar window") {
    const LtvModel scalar = constant_scalar_model(10, 0.8, 1.0);
    Eigen::MatrixXd expected(3, 2);
    expected << 0, 0, 1, 0, 0.8, 1;
    CHECK(input_response(scalar, 2, 3).isApprox(expected));
}

TEST_CASE("measurement-noise block diagonal pads regime changes correctly") {
    const Scenario two = builtin_model_2(30);
    const int k = 19; // n_z switches from 1 to 2 at k = 20
    const Eigen::MatrixXd d = meas_noise_block_diag(two.model, k, 2);
    REQUIRE(d.rows() == 3);
    REQUIRE(d.cols() == 4);
    CHECK(d.block(0, 0, 1, 2).isApprox(two.model.D[k]));
    CHECK(d.block(1, 2, 2, 2).isApprox(two.model.D[k + 1]));
    CHECK(d.block(0, 2, 1, 2).isZero(0.0));
    CHECK(d.block(1, 0, 2, 2).isZero(0.0));
}

TEST_CASE("predictor gain for the scalar one-step case") {
    const LtvModel scalar = constant_scalar_model(10, 0.8, 1.0);
    const Eigen::MatrixXd gain = predictor_gain(scalar, 3, 1, 1);
    CHECK(gain(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("predictor gain agrees with a least-squares solve") {
    const Scenario two = builtin_model_2(40);
    const int k = 15, L = 2, N = 1;
    const Eigen::MatrixXd gain = predictor_gain(two.model, k, L, N);
    // Independent route: project a probe through the normal-equations
    // estimate of the window state instead of the pseudo-inverse.
    const Eigen::MatrixXd obs_prev = observability_stack(two.model, k - N, L);
    const Eigen::MatrixXd obs_cur = observability_stack(two.model, k, L);
    const Eigen::MatrixXd trans = transition_product(two.model, k - N, N);
    for (int probe = 0; probe < 3; ++probe) {
        const Eigen::VectorXd zp = mdm_test::random_matrix(obs_prev.rows(), 1, 100 + probe);
        const Eigen::VectorXd xhat = obs_prev.colPivHouseholderQr().solve(zp);
        CHECK((gain * zp - obs_cur * trans * xhat).norm() < 1e-10);
    }
}

TEST_CASE("predictor gain reports rank deficiency") {
    const LtvModel blind = constant_scalar_model(10, 0.8, 0.0); // H = 0
    CHECK_THROWS_AS(predictor_gain(blind, 3, 1, 1), RankError);
}

TEST_CASE("residual maps for the scalar one-step case") {
    const LtvModel scalar = constant_scalar_model(10, 0.8, 1.0);
    const ResidualMaps maps = residual_maps(scalar, 3, 1, 1);
    REQUIRE(maps.state_gain.rows() == 1);
    CHECK(maps.state_gain(0, 0) == doctest::Approx(1.0));
    REQUIRE(maps.meas_gain.cols() == 2);
    CHECK(maps.meas_gain(0, 0) == doctest::Approx(-0.8));
    CHECK(maps.meas_gain(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("zero-prediction-window maps become an annihilating projector") {
    const LtvModel scalar = constant_scalar_model(10, 0.8, 1.0);
    const ResidualMaps maps = residual_maps(scalar, 3, 2, 0);
    Eigen::MatrixXd expected(2, 2);
    expected << 0.3902, -0.4878, -0.4878, 0.6098;
    CHECK((maps.meas_gain - expected).cwiseAbs().maxCoeff() < 5e-5);
    const Eigen::MatrixXd obs = observability_stack(scalar, 3, 2);
    CHECK((maps.meas_gain * obs).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("kernel blocks carry the expected structure") {
    const LtvModel scalar = constant_scalar_model(10, 0.8, 1.0);
    const ResidualKernel kernel = build_kernel(scalar, 3, 1, 1);

    // Noise map coefficients (H E, -gain D, D) for the constants above.
    REQUIRE(kernel.noise_map.cols() == 3);
    CHECK(kernel.noise_map(0, 0) == doctest::Approx(1.0));
    CHECK(kernel.noise_map(0, 1) == doctest::Approx(-0.8));
    CHECK(kernel.noise_map(0, 2) == doctest::Approx(1.0));

    // noise_shape is block diagonal: E-blocks upper-left, D-blocks
    // lower-right, zero off blocks.
    CHECK(kernel.noise_shape.topRightCorner(1, 2).isZero(0.0));
    CHECK(kernel.noise_shape.bottomLeftCorner(2, 1).isZero(0.0));

    // data_map applied to [-U; Z] stacks [-G U; Z].
    Eigen::VectorXd data(3);
    data << -0.7, 1.5, -2.5;
    const Eigen::VectorXd mapped = kernel.data_map * data;
    CHECK(mapped(0) == doctest::Approx(-0.7));
    CHECK(mapped(1) == doctest::Approx(1.5));
    CHECK(mapped(2) == doctest::Approx(-2.5));
}

TEST_CASE("residual identity: data route equals noise route") {
    const Scenario one = builtin_model_1(60);
    const auto traj1 = simulate(one.model, one.noise, one.x0_mean, one.x0_var,
                                one.controls, 17);
    CHECK(max_residual_gap(one.model, traj1, 1, 1) < 1e-8);

    const Scenario two = builtin_model_2(60);
    const auto traj2 = simulate(two.model, two.noise, two.x0_mean, two.x0_var,
                                two.controls, 18);
    CHECK(max_residual_gap(two.model, traj2, 2, 1) < 1e-8);

    const LtvModel alt = mdm_test::alternating_dim_model(60);
    NoiseSpec noise;
    noise.Q = 1.5 * Eigen::MatrixXd::Identity(1, 1);
    noise.R = (Eigen::MatrixXd(2, 2) << 1.0, 0.3, 0.3, 0.8).finished();
    std::vector<Eigen::VectorXd> controls;
    for (int k = 0; k < 60; ++k)
        controls.push_back(Eigen::VectorXd::Constant(1, std::cos(0.1 * k)));
    const auto traj3 = simulate(alt, noise, Eigen::VectorXd::Zero(2),
                                Eigen::MatrixXd::Identity(2, 2), controls, 19);
    CHECK(max_residual_gap(alt, traj3, 2, 1) < 1e-8);
    CHECK(max_residual_gap(alt, traj3, 2, 2) < 1e-8);
    CHECK(max_residual_gap(alt, traj3, 3, 0) < 1e-8);
}

TEST_CASE("noise-free data gives identically zero residuals") {
    const Scenario one = builtin_model_1(40);
    const NoiseSpec zero{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    const auto traj = simulate(one.model, zero, one.x0_mean, one.x0_var, one.controls, 3);
    for (int L : {1, 2})
        for (int N : {0, 1})
            for (int k = N; k <= one.model.tau() - L + 1; ++k) {
                const ResidualKernel kernel = build_kernel(one.model, k, L, N);
                CHECK(residual(kernel, traj.z, traj.u).cwiseAbs().maxCoeff() < 1e-10);
            }
}

TEST_CASE("window prefix sums equal concatenated per-step dimensions") {
    const Scenario two = builtin_model_2(30);
    const StackIndex idx = window_index(two.model, 20, 2, 1); // spans the regime switch
    REQUIRE(idx.z_offsets.size() == 4);
    int sum = 0;
    for (int i = 0; i < idx.P; ++i) {
        CHECK(idx.z_offsets[i] == sum);
        sum += two.model.n_z[idx.first + i];
    }
    CHECK(idx.z_total() == sum);
    CHECK(idx.z_head() + idx.z_cur() == idx.z_total());
    CHECK(idx.z_pred() + idx.z_tail() == idx.z_total());
    CHECK_THROWS_AS(window_index(two.model, 0, 2, 1), DataError);
    CHECK_THROWS_AS(window_index(two.model, 30, 2, 1), DataError);
}

} // TEST_SUITE

#include <doctest.h>

#include <cmath>

#include "mc_oracles.hpp"
#include "mdm/moments.hpp"
#include "mdm/random.hpp"
#include "mdm/vec_maps.hpp"
#include "test_helpers.hpp"

using namespace mdm;
using mdm_test::mc_eta_cov;
using mdm_test::QuarticMc;

TEST_SUITE("moments") {

TEST_CASE("joint noise covariance carries Q and R on the overlap shift") {
    Eigen::MatrixXd q(1, 1), r(1, 1);
    q << 2.0;
    r << 1.5;
    const JointNoiseCov lag1 = joint_noise_cov(q, r, 2, 1);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
    expected(2, 1) = 1.5; // shared v sample
    CHECK(lag1.cross.isApprox(expected));
    CHECK(lag1.self.isApprox(Eigen::DiagonalMatrix<double, 3>(2.0, 1.5, 1.5).toDenseMatrix()));

    const JointNoiseCov lag0 = joint_noise_cov(q, r, 2, 0);
    CHECK(lag0.cross.isApprox(lag0.self));

    CHECK(joint_noise_cov(q, r, 2, 2).cross.isZero(0.0));
}

TEST_CASE("gaussian quartic: scalar fourth moment and independence") {
    Eigen::MatrixXd s(1, 1);
    s << 2.0;
    CHECK(gaussian_quartic(s, s, s)(0, 0) == doctest::Approx(12.0)); // 3 sigma^4

    const Eigen::MatrixXd sxx = mdm_test::random_spd(2, 31);
    const Eigen::MatrixXd syy = mdm_test::random_spd(3, 32);
    const Eigen::MatrixXd quartic =
        gaussian_quartic(sxx, syy, Eigen::MatrixXd::Zero(2, 3));
    CHECK(quartic.isApprox(vec(sxx) * vec(syy).transpose(), 1e-12));
}

TEST_CASE("gaussian quartic matches sampling for a standard 2-d vector") {
    const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd exact = gaussian_quartic(s, s, s);

    GaussianSampler rng(77);
    const long n = 1000000;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4);
    for (long i = 0; i < n; ++i) {
        const Eigen::VectorXd x = rng.next_vector(2);
        Eigen::VectorXd xx(4);
        xx << x(0) * x(0), x(0) * x(1), x(1) * x(0), x(1) * x(1);
        sum.noalias() += xx * xx.transpose();
    }
    sum /= static_cast<double>(n);
    CHECK((sum - exact).cwiseAbs().maxCoeff() < 0.01 * exact.cwiseAbs().maxCoeff());
}

TEST_CASE("eta covariance: scalar state-noise-only window") {
    Eigen::MatrixXd q(1, 1);
    q << 2.0;
    const Eigen::MatrixXd e0 = eta_cov(q, Eigen::MatrixXd(0, 0), 2, 0);
    REQUIRE(e0.rows() == 1);
    CHECK(e0(0, 0) == doctest::Approx(8.0)); // 2 Q^2
}

TEST_CASE("eta covariance vanishes for lags at or beyond the window length") {
    Eigen::MatrixXd q(1, 1);
    q << 3.0;
    const Eigen::MatrixXd r = (Eigen::MatrixXd(2, 2) << 2.0, -1.0, -1.0, 1.0).finished();
    for (int j : {3, 4, 7}) CHECK(eta_cov(q, r, 3, j).isZero(0.0));
}

TEST_CASE("eta covariance matches a Monte-Carlo oracle at lag 1") {
    Eigen::MatrixXd q(1, 1), r(1, 1);
    q << 2.0;
    r << 1.0;
    const Eigen::MatrixXd exact = eta_cov(q, r, 2, 1);
    const QuarticMc mc = mc_eta_cov(q, r, 2, 1, 1000000, 5150);
    // Entries reachable only through the shared v sample.
    const double scale = exact.cwiseAbs().maxCoeff();
    REQUIRE(scale > 0.0);
    for (int rr = 0; rr < exact.rows(); ++rr)
        for (int cc = 0; cc < exact.cols(); ++cc) {
            const double tol =
                std::max(5.0 * mc.std_err(rr, cc), 0.02 * scale);
            CHECK(std::abs(exact(rr, cc) - mc.mean(rr, cc)) < tol);
        }
}

TEST_CASE("eta covariance entries agree with sampling for a random model") {
    const Eigen::MatrixXd q = mdm_test::random_spd(1, 41);
    const Eigen::MatrixXd r = mdm_test::random_spd(2, 42);
    for (int j : {0, 1}) {
        const Eigen::MatrixXd exact = eta_cov(q, r, 2, j);
        const QuarticMc mc = mc_eta_cov(q, r, 2, j, 200000, 600 + j);
        for (int rr = 0; rr < exact.rows(); ++rr)
            for (int cc = 0; cc < exact.cols(); ++cc)
                CHECK(std::abs(exact(rr, cc) - mc.mean(rr, cc)) <
                      5.0 * mc.std_err(rr, cc) + 1e-12);
    }
}

TEST_CASE("lag covariance transposes consistently") {
    const Eigen::MatrixXd q = mdm_test::random_spd(1, 51);
    const Eigen::MatrixXd r = mdm_test::random_spd(2, 52);
    for (int j : {1, 2}) {
        const JointNoiseCov cov = joint_noise_cov(q, r, 3, j);
        // Reversing the roles of the two windows transposes the matrix form.
        const Eigen::MatrixXd forward = eta_cov(q, r, 3, j);
        Eigen::MatrixXd reversed = gaussian_quartic(cov.self, cov.self, cov.cross);
        const Eigen::VectorXd mean_sq = vec(cov.self);
        reversed -= mean_sq * mean_sq.transpose();
        CHECK(forward.transpose().isApprox(reversed, 1e-12));
    }
}

TEST_CASE("lag-0 covariance is symmetric PSD") {
    const Eigen::MatrixXd q = mdm_test::random_spd(1, 61);
    const Eigen::MatrixXd r = mdm_test::random_spd(2, 62);
    const Eigen::MatrixXd e0 = eta_cov(q, r, 3, 0);
    CHECK(e0.isApprox(e0.transpose(), 1e-12));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e0);
    CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());
}

} // TEST_SUITE

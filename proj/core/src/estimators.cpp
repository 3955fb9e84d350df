#include "mdm/estimators.hpp"

#include <chrono>
#include <unordered_map>

#include <Eigen/SparseCholesky>

#include "mdm/errors.hpp"
#include "mdm/linalg.hpp"
#include "mdm/moments.hpp"

namespace mdm {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::VectorXd stack_window(const std::vector<Eigen::VectorXd>& seq, int first, int count,
                             int total) {
    Eigen::VectorXd out(total);
    int at = 0;
    for (int i = 0; i < count; ++i) {
        out.segment(at, seq[first + i].size()) = seq[first + i];
        at += static_cast<int>(seq[first + i].size());
    }
    return out;
}

/// Unique entries of r (x) r, column-major lower triangle.
Eigen::VectorXd unique_square(const Eigen::VectorXd& r) {
    const int n = static_cast<int>(r.size());
    Eigen::VectorXd y(n * (n + 1) / 2);
    int t = 0;
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) y[t++] = r[i] * r[j];
    return y;
}

/// Rows of the shaping block: row (i, j) of Xi M^{(x)2} is the Kronecker
/// product of rows j and i of the residual noise map M.
Eigen::MatrixXd shaping_block(const Eigen::MatrixXd& noise_map) {
    const int n = static_cast<int>(noise_map.rows());
    const int m = static_cast<int>(noise_map.cols());
    Eigen::MatrixXd shaping(n * (n + 1) / 2, m * m);
    int t = 0;
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) {
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    shaping(t, a * m + b) = noise_map(j, a) * noise_map(i, b);
            ++t;
        }
    return shaping;
}

Eigen::MatrixXd inverse_of_normal_matrix(const Eigen::MatrixXd& normal, const char* method) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double tol =
        rank_tolerance(normal.rows(), normal.cols(), ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() <= tol)
        throw RankError(std::string("estimators: ") + method +
                            ": stacked design is rank deficient (identifiability failure)",
                        -1, static_cast<int>((ev.array() > tol).count()));
    return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

EstimateReport finish_report(std::string method, const Eigen::VectorXd& estimate,
                             Eigen::MatrixXd est_cov, const UniqueCovMap& params,
                             Clock::time_point start) {
    EstimateReport rep;
    rep.method = std::move(method);
    rep.estimate = estimate;
    auto [q, r] = params.unpack(estimate);
    rep.Q_hat = std::move(q);
    rep.R_hat = std::move(r);
    rep.est_cov = std::move(est_cov);
    rep.seconds = elapsed_seconds(start);
    return rep;
}

} // namespace

Eigen::VectorXd residual(const ResidualKernel& kernel, const std::vector<Eigen::VectorXd>& z,
                         const std::vector<Eigen::VectorXd>& u) {
    const StackIndex& idx = kernel.idx;
    if (idx.first + idx.P - 1 >= static_cast<int>(z.size()) ||
        (idx.P > 1 && idx.first + idx.P - 2 >= static_cast<int>(u.size())))
        throw DataError("estimators: window at k=" + std::to_string(kernel.k) +
                        " needs data beyond the supplied sequences");
    Eigen::VectorXd data(idx.u_total() + idx.z_total());
    data.head(idx.u_total()) = -stack_window(u, idx.first, idx.P - 1, idx.u_total());
    data.tail(idx.z_total()) = stack_window(z, idx.first, idx.P, idx.z_total());
    return kernel.combined * (kernel.data_map * data);
}

Eigen::VectorXd residual(const LtvModel& model, const Trajectory& data, int k, int L, int N) {
    return residual(build_kernel(model, k, L, N), data.z, data.u);
}

Eigen::VectorXd residual_from_noises(const ResidualKernel& kernel,
                                     const std::vector<Eigen::VectorXd>& w,
                                     const std::vector<Eigen::VectorXd>& v) {
    const StackIndex& idx = kernel.idx;
    if (idx.first + idx.P - 1 >= static_cast<int>(v.size()) ||
        (idx.P > 1 && idx.first + idx.P - 2 >= static_cast<int>(w.size())))
        throw DataError("estimators: window at k=" + std::to_string(kernel.k) +
                        " needs noises beyond the supplied sequences");
    Eigen::VectorXd noises(idx.noise_total());
    noises.head(idx.w_total()) = stack_window(w, idx.first, idx.P - 1, idx.w_total());
    noises.tail(idx.v_total()) = stack_window(v, idx.first, idx.P, idx.v_total());
    return kernel.noise_map * noises;
}

RegressionSystem build_regression(const LtvModel& model, const Trajectory& data, int L,
                                  int N) {
    if (L < 1 || N < 0) throw DimensionError("estimators: need L >= 1 and N >= 0");
    const int tau = model.tau();
    if (tau < N + L - 1)
        throw DataError("estimators: horizon tau=" + std::to_string(tau) +
                        " too short for L=" + std::to_string(L) + ", N=" + std::to_string(N));
    if (static_cast<int>(data.z.size()) != tau + 1 ||
        static_cast<int>(data.u.size()) != tau)
        throw DataError("estimators: trajectory length inconsistent with model horizon");

    RegressionSystem sys;
    sys.L = L;
    sys.N = N;
    sys.P = L + N;
    sys.params = UniqueCovMap(model.n_w, model.n_v);
    sys.noise_dim = stacked_noise_dim(model.n_w, model.n_v, sys.P);
    const Eigen::SparseMatrix<double> psi = replication_matrix(model.n_w, model.n_v, sys.P);

    sys.offsets.push_back(0);
    for (int k = N; k <= tau - L + 1; ++k) {
        const ResidualKernel kernel = build_kernel(model, k, L, N);
        RegressionBlock block;
        block.k = k;
        block.obs = unique_square(residual(kernel, data.z, data.u));
        block.shaping = shaping_block(kernel.noise_map);
        block.design = block.shaping * psi;
        sys.offsets.push_back(sys.offsets.back() + block.rows());
        sys.blocks.push_back(std::move(block));
    }

    sys.stacked_design.resize(sys.total_rows(), sys.params.size());
    sys.stacked_obs.resize(sys.total_rows());
    for (std::size_t b = 0; b < sys.blocks.size(); ++b) {
        sys.stacked_design.middleRows(sys.offsets[b], sys.blocks[b].rows()) =
            sys.blocks[b].design;
        sys.stacked_obs.segment(sys.offsets[b], sys.blocks[b].rows()) = sys.blocks[b].obs;
    }
    return sys;
}

EstimateReport estimate_unweighted(const RegressionSystem& sys) {
    const auto start = Clock::now();
    const Eigen::MatrixXd normal = sys.stacked_design.transpose() * sys.stacked_design;
    const Eigen::MatrixXd cov = inverse_of_normal_matrix(normal, "uw-nr");
    const Eigen::VectorXd estimate =
        cov * (sys.stacked_design.transpose() * sys.stacked_obs);
    return finish_report("uw-nr", estimate, cov, sys.params, start);
}

std::vector<Eigen::MatrixXd> build_S2(const RegressionSystem& sys) {
    std::vector<Eigen::MatrixXd> weights;
    weights.reserve(sys.blocks.size());
    for (const auto& block : sys.blocks)
        weights.push_back(block.shaping * block.shaping.transpose());
    return weights;
}

EstimateReport estimate_semiweighted(const RegressionSystem& sys) {
    const auto start = Clock::now();
    const int p = sys.params.size();
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (const auto& block : sys.blocks) {
        const Eigen::MatrixXd weight =
            pinv_symmetric(block.shaping * block.shaping.transpose());
        const Eigen::MatrixXd weighted_design = weight * block.design;
        normal.noalias() += block.design.transpose() * weighted_design;
        rhs.noalias() += weighted_design.transpose() * block.obs;
    }
    const Eigen::MatrixXd cov = inverse_of_normal_matrix(normal, "sw-nr");
    return finish_report("sw-nr", cov * rhs, cov, sys.params, start);
}

Eigen::SparseMatrix<double> build_P2(const RegressionSystem& sys, const Eigen::MatrixXd& Q,
                                     const Eigen::MatrixXd& R) {
    const int nblocks = static_cast<int>(sys.blocks.size());
    const int rows = sys.total_rows();

    std::vector<Eigen::MatrixXd> lag_cov(sys.P);
    for (int j = 0; j < sys.P; ++j) lag_cov[j] = eta_cov(Q, R, sys.P, j);

    std::vector<Eigen::Triplet<double>> triplets;
    auto add_block = [&](int row0, int col0, const Eigen::MatrixXd& m) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                if (m(r, c) != 0.0)
                    triplets.emplace_back(row0 + static_cast<int>(r),
                                          col0 + static_cast<int>(c), m(r, c));
    };

    for (int a = 0; a < nblocks; ++a) {
        // lag_cov[j] is E[eta_{k+j} eta_k^T]; with the shaping blocks it
        // yields the (a+j, a) block of the stacked error covariance.
        const Eigen::MatrixXd right = lag_cov[0] * sys.blocks[a].shaping.transpose();
        Eigen::MatrixXd diag = sys.blocks[a].shaping * right;
        diag = 0.5 * (diag + diag.transpose()).eval();
        add_block(sys.offsets[a], sys.offsets[a], diag);
        for (int j = 1; j < sys.P && a + j < nblocks; ++j) {
            const Eigen::MatrixXd lower = sys.blocks[a + j].shaping *
                                          (lag_cov[j] * sys.blocks[a].shaping.transpose());
            add_block(sys.offsets[a + j], sys.offsets[a], lower);
            add_block(sys.offsets[a], sys.offsets[a + j], lower.transpose());
        }
    }
    Eigen::SparseMatrix<double> cov(rows, rows);
    cov.setFromTriplets(triplets.begin(), triplets.end());
    return cov;
}

EstimateReport estimate_weighted_given(const RegressionSystem& sys,
                                       const Eigen::SparseMatrix<double>& error_cov,
                                       const std::string& method_name) {
    const auto start = Clock::now();
    const int rows = sys.total_rows();
    if (error_cov.rows() != rows || error_cov.cols() != rows)
        throw DimensionError("estimators: error covariance has wrong dimension");

    Eigen::SparseMatrix<double> sym = Eigen::SparseMatrix<double>(error_cov.transpose());
    sym = 0.5 * (sym + error_cov);

    double mean_diag = 0.0;
    for (int i = 0; i < rows; ++i) mean_diag += sym.coeff(i, i);
    mean_diag = rows > 0 ? mean_diag / rows : 0.0;
    if (mean_diag <= 0.0) mean_diag = 1.0;

    Eigen::SparseMatrix<double> identity(rows, rows);
    identity.setIdentity();

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor;
    double jitter = 0.0;
    for (double delta = 1e-10;; delta *= 10.0) {
        factor.compute(jitter == 0.0
                           ? sym
                           : Eigen::SparseMatrix<double>(sym + jitter * identity));
        if (factor.info() == Eigen::Success && factor.vectorD().minCoeff() > 0.0) break;
        if (delta > 1e-2)
            throw RankError("estimators: " + method_name +
                                ": error covariance not factorizable after regularization",
                            -1, 0);
        jitter = delta * mean_diag;
    }

    const Eigen::MatrixXd whitened_design = factor.solve(sys.stacked_design);
    const Eigen::VectorXd whitened_obs = factor.solve(sys.stacked_obs);
    const Eigen::MatrixXd normal = sys.stacked_design.transpose() * whitened_design;
    const Eigen::VectorXd rhs = sys.stacked_design.transpose() * whitened_obs;
    const Eigen::MatrixXd cov = inverse_of_normal_matrix(normal, method_name.c_str());
    return finish_report(method_name, cov * rhs, cov, sys.params, start);
}

EstimateReport estimate_weighted(const RegressionSystem& sys, const EstimateReport& seed) {
    const auto start = Clock::now();
    EstimateReport rep =
        estimate_weighted_given(sys, build_P2(sys, seed.Q_hat, seed.R_hat), "we-nr");
    rep.seconds = elapsed_seconds(start);
    return rep;
}

EstimateReport project_psd(const EstimateReport& report, const UniqueCovMap& params) {
    auto clip = [](const Eigen::MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        return Eigen::MatrixXd(es.eigenvectors() *
                               es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                               es.eigenvectors().transpose());
    };
    EstimateReport out = report;
    out.Q_hat = clip(report.Q_hat);
    out.R_hat = clip(report.R_hat);
    out.estimate = params.pack(out.Q_hat, out.R_hat);
    return out;
}

} // namespace mdm

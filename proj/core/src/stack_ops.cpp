#include "mdm/stack_ops.hpp"

#include <limits>

#include <Eigen/SVD>

#include "mdm/errors.hpp"
#include "mdm/linalg.hpp"

namespace mdm {

double rank_tolerance(Eigen::Index rows, Eigen::Index cols, double sigma_max) {
    return static_cast<double>(std::max(rows, cols)) *
           std::numeric_limits<double>::epsilon() * sigma_max;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, int* achieved_rank) {
    if (m.size() == 0) {
        if (achieved_rank) *achieved_rank = 0;
        return Eigen::MatrixXd(m.cols(), m.rows());
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = rank_tolerance(m.rows(), m.cols(), sv.size() ? sv[0] : 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) {
            inv[i] = 1.0 / sv[i];
            ++rank;
        }
    if (achieved_rank) *achieved_rank = rank;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd pinv_symmetric(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double tol = rank_tolerance(m.rows(), m.cols(),
                                      ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev[i]) > tol) inv[i] = 1.0 / ev[i];
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

StackIndex window_index(const LtvModel& model, int k, int L, int N) {
    if (L < 1 || N < 0) throw DimensionError("stack_ops: need L >= 1 and N >= 0");
    const int first = k - N;
    const int P = L + N;
    if (first < 0 || first + P - 1 > model.tau())
        throw DataError("stack_ops: window [" + std::to_string(first) + ", " +
                        std::to_string(first + P - 1) + "] at k=" + std::to_string(k) +
                        " exceeds horizon tau=" + std::to_string(model.tau()));
    StackIndex idx;
    idx.first = first;
    idx.L = L;
    idx.N = N;
    idx.P = P;
    idx.n_w = model.n_w;
    idx.n_v = model.n_v;
    idx.z_offsets.resize(P + 1);
    idx.z_offsets[0] = 0;
    for (int i = 0; i < P; ++i) idx.z_offsets[i + 1] = idx.z_offsets[i] + model.n_z[first + i];
    // Controls act on transitions; the window uses u_{first}..u_{first+P-2}.
    idx.u_offsets.resize(P);
    idx.u_offsets[0] = 0;
    for (int i = 0; i + 1 < P; ++i)
        idx.u_offsets[i + 1] = idx.u_offsets[i] + model.n_u[first + i];
    return idx;
}

Eigen::MatrixXd transition_product(const LtvModel& model, int k, int j) {
    if (j < 0) throw DimensionError("stack_ops: transition product needs j >= 0");
    if (k < 0 || k + j > model.tau())
        throw DataError("stack_ops: transition product [" + std::to_string(k) + ", " +
                        std::to_string(k + j) + ") exceeds horizon");
    Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(model.n_x, model.n_x);
    for (int i = 0; i < j; ++i) prod = model.F[k + i] * prod;
    return prod;
}

Eigen::MatrixXd input_response(const LtvModel& model, int k, int L) {
    if (L < 1) throw DimensionError("stack_ops: input response needs L >= 1");
    int rows = 0;
    for (int i = 0; i < L; ++i) rows += model.n_z[k + i];
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(rows, (L - 1) * model.n_x);
    int r = 0;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < i; ++j)
            gamma.block(r, j * model.n_x, model.n_z[k + i], model.n_x) =
                model.H[k + i] * transition_product(model, k + j + 1, i - j - 1);
        r += model.n_z[k + i];
    }
    return gamma;
}

Eigen::MatrixXd control_block_diag(const LtvModel& model, int first, int count) {
    int cols = 0;
    for (int i = 0; i < count; ++i) cols += model.n_u[first + i];
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(count * model.n_x, cols);
    int c = 0;
    for (int i = 0; i < count; ++i) {
        g.block(i * model.n_x, c, model.n_x, model.n_u[first + i]) = model.G[first + i];
        c += model.n_u[first + i];
    }
    return g;
}

Eigen::MatrixXd state_noise_block_diag(const LtvModel& model, int first, int count) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(count * model.n_x, count * model.n_w);
    for (int i = 0; i < count; ++i)
        e.block(i * model.n_x, i * model.n_w, model.n_x, model.n_w) = model.E[first + i];
    return e;
}

Eigen::MatrixXd meas_noise_block_diag(const LtvModel& model, int first, int count) {
    int rows = 0;
    for (int i = 0; i < count; ++i) rows += model.n_z[first + i];
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, count * model.n_v);
    int r = 0;
    for (int i = 0; i < count; ++i) {
        d.block(r, i * model.n_v, model.n_z[first + i], model.n_v) = model.D[first + i];
        r += model.n_z[first + i];
    }
    return d;
}

namespace {

Eigen::MatrixXd pinv_obs_stack(const LtvModel& model, int k, int L) {
    const Eigen::MatrixXd obs = observability_stack(model, k, L);
    int rank = 0;
    const Eigen::MatrixXd dagger = pinv(obs, &rank);
    if (rank < model.n_x)
        throw RankError("stack_ops: observability stack at k=" + std::to_string(k) +
                            " has rank " + std::to_string(rank) + " < n_x=" +
                            std::to_string(model.n_x),
                        k, rank);
    return dagger;
}

} // namespace

Eigen::MatrixXd predictor_gain(const LtvModel& model, int k, int L, int N) {
    window_index(model, k, L, N);
    return observability_stack(model, k, L) * transition_product(model, k - N, N) *
           pinv_obs_stack(model, k - N, L);
}

ResidualMaps residual_maps(const LtvModel& model, int k, int L, int N) {
    const StackIndex idx = window_index(model, k, L, N);
    const int n_x = model.n_x;
    const int h = idx.z_cur();
    ResidualMaps maps;

    if (N == 0) {
        const Eigen::MatrixXd obs = observability_stack(model, k, L);
        maps.meas_gain = Eigen::MatrixXd::Identity(h, h) - obs * pinv_obs_stack(model, k, L);
        maps.state_gain = maps.meas_gain * input_response(model, k, L);
        return maps;
    }

    const Eigen::MatrixXd gain = predictor_gain(model, k, L, N);

    // Stacked transition products [F^{N-1} at k-N+1, ..., F^1 at k-1, I].
    Eigen::MatrixXd phi(n_x, N * n_x);
    for (int i = 0; i < N; ++i)
        phi.middleCols(i * n_x, n_x) = transition_product(model, k - N + 1 + i, N - 1 - i);

    maps.state_gain = Eigen::MatrixXd::Zero(h, (idx.P - 1) * n_x);
    maps.state_gain.leftCols(N * n_x) = observability_stack(model, k, L) * phi;
    if (L > 1) {
        maps.state_gain.rightCols((L - 1) * n_x) += input_response(model, k, L);
        maps.state_gain.leftCols((L - 1) * n_x) -= gain * input_response(model, k - N, L);
    }

    maps.meas_gain = Eigen::MatrixXd::Zero(h, idx.z_total());
    maps.meas_gain.rightCols(h) = Eigen::MatrixXd::Identity(h, h);
    maps.meas_gain.leftCols(idx.z_pred()) -= gain;
    return maps;
}

ResidualKernel build_kernel(const LtvModel& model, int k, int L, int N) {
    ResidualKernel kernel;
    kernel.k = k;
    kernel.idx = window_index(model, k, L, N);
    const StackIndex& idx = kernel.idx;
    const int s = idx.first;
    const int P = idx.P;
    const int n_x = model.n_x;

    ResidualMaps maps = residual_maps(model, k, L, N);
    kernel.state_gain = std::move(maps.state_gain);
    kernel.meas_gain = std::move(maps.meas_gain);
    kernel.combined.resize(kernel.state_gain.rows(),
                           kernel.state_gain.cols() + kernel.meas_gain.cols());
    kernel.combined << kernel.state_gain, kernel.meas_gain;

    const Eigen::MatrixXd ctrl = control_block_diag(model, s, P - 1);
    const int inj = (P - 1) * n_x;
    kernel.data_map = Eigen::MatrixXd::Zero(inj + idx.z_total(), idx.u_total() + idx.z_total());
    kernel.data_map.topLeftCorner(inj, idx.u_total()) = ctrl;
    kernel.data_map.bottomRightCorner(idx.z_total(), idx.z_total())
        .setIdentity();

    kernel.noise_shape = Eigen::MatrixXd::Zero(inj + idx.z_total(), idx.noise_total());
    kernel.noise_shape.topLeftCorner(inj, idx.w_total()) =
        state_noise_block_diag(model, s, P - 1);
    kernel.noise_shape.bottomRightCorner(idx.z_total(), idx.v_total()) =
        meas_noise_block_diag(model, s, P);

    kernel.noise_map = kernel.combined * kernel.noise_shape;
    kernel.control_map = kernel.state_gain * ctrl;
    return kernel;
}

} // namespace mdm

#include "mdm/moments.hpp"

#include "mdm/errors.hpp"
#include "mdm/vec_maps.hpp"

namespace mdm {

JointNoiseCov joint_noise_cov(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int P,
                              int j) {
    if (P < 1 || j < 0) throw DimensionError("moments: need P >= 1 and j >= 0");
    if (Q.rows() != Q.cols() || R.rows() != R.cols())
        throw DimensionError("moments: Q and R must be square");
    const int n_w = static_cast<int>(Q.rows());
    const int n_v = static_cast<int>(R.rows());
    const int m = stacked_noise_dim(n_w, n_v, P);
    const int w_span = (P - 1) * n_w;

    JointNoiseCov cov;
    cov.self = Eigen::MatrixXd::Zero(m, m);
    for (int a = 0; a < P - 1; ++a) cov.self.block(a * n_w, a * n_w, n_w, n_w) = Q;
    for (int a = 0; a < P; ++a)
        cov.self.block(w_span + a * n_v, w_span + a * n_v, n_v, n_v) = R;

    // stack_k holds samples first..first+P-2 (w part) and first..first+P-1
    // (v part); stack_{k+j} holds the same shifted by j. Sample a of the
    // first aligns with sample a - j of the second.
    cov.cross = Eigen::MatrixXd::Zero(m, m);
    for (int a = j; a < P - 1; ++a) cov.cross.block(a * n_w, (a - j) * n_w, n_w, n_w) = Q;
    for (int a = j; a < P; ++a)
        cov.cross.block(w_span + a * n_v, w_span + (a - j) * n_v, n_v, n_v) = R;
    return cov;
}

Eigen::MatrixXd gaussian_quartic(const Eigen::MatrixXd& Sxx, const Eigen::MatrixXd& Syy,
                                 const Eigen::MatrixXd& Sxy) {
    const Eigen::Index nx = Sxx.rows();
    const Eigen::Index ny = Syy.rows();
    if (Sxx.cols() != nx || Syy.cols() != ny || Sxy.rows() != nx || Sxy.cols() != ny)
        throw DimensionError("moments: quartic covariance blocks are inconsistent");
    Eigen::MatrixXd out(nx * nx, ny * ny);
    for (Eigen::Index a = 0; a < nx; ++a)
        for (Eigen::Index b = 0; b < nx; ++b) {
            const Eigen::Index row = a * nx + b;
            for (Eigen::Index c = 0; c < ny; ++c)
                for (Eigen::Index d = 0; d < ny; ++d)
                    out(row, c * ny + d) = Sxx(a, b) * Syy(c, d) + Sxy(a, c) * Sxy(b, d) +
                                           Sxy(a, d) * Sxy(b, c);
        }
    return out;
}

Eigen::MatrixXd eta_cov(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int P, int j) {
    const JointNoiseCov cov = joint_noise_cov(Q, R, P, j);
    const Eigen::Index m = cov.self.rows();
    if (j >= P) return Eigen::MatrixXd::Zero(m * m, m * m);
    // E[eta_{k+j} eta_k^T]: quartic moment with x = stack_{k+j}, y = stack_k,
    // so Sxy = E[stack_{k+j} stack_k^T] = cross^T. The leading Isserlis term
    // cancels against the outer product of the means of the squares.
    Eigen::MatrixXd out = gaussian_quartic(cov.self, cov.self, cov.cross.transpose());
    const Eigen::VectorXd mean_sq = vec(cov.self);
    out.noalias() -= mean_sq * mean_sq.transpose();
    return out;
}

} // namespace mdm

#include "mdm/vec_maps.hpp"

#include <vector>

#include "mdm/errors.hpp"

namespace mdm {

Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols)
        throw DimensionError("vec_maps: unvec of length " + std::to_string(v.size()) +
                             " into " + std::to_string(rows) + "x" + std::to_string(cols));
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::MatrixXd kron_power(const Eigen::MatrixXd& m, int n) {
    if (n < 1) throw DimensionError("vec_maps: Kronecker power needs n >= 1");
    Eigen::MatrixXd out = m;
    for (int i = 1; i < n; ++i) {
        Eigen::MatrixXd next(out.rows() * m.rows(), out.cols() * m.cols());
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            for (Eigen::Index c = 0; c < out.cols(); ++c)
                next.block(r * m.rows(), c * m.cols(), m.rows(), m.cols()) = out(r, c) * m;
        out = std::move(next);
    }
    return out;
}

namespace {

// Position of lower-triangle entry (i, j), i >= j, in column-major order.
int tri_index(int n, int i, int j) {
    if (i < j) std::swap(i, j);
    return j * n - j * (j - 1) / 2 + (i - j);
}

} // namespace

UniqueCovMap::UniqueCovMap(int n_w, int n_v) : n_w_(n_w), n_v_(n_v) {
    if (n_w < 0 || n_v < 0) throw DimensionError("vec_maps: negative noise dimension");
    size_ = n_w * (n_w + 1) / 2 + n_v * (n_v + 1) / 2;
}

int UniqueCovMap::q_index(int i, int j) const { return tri_index(n_w_, i, j); }

int UniqueCovMap::r_index(int i, int j) const {
    return n_w_ * (n_w_ + 1) / 2 + tri_index(n_v_, i, j);
}

Eigen::VectorXd UniqueCovMap::pack(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) const {
    if (Q.rows() != n_w_ || Q.cols() != n_w_ || R.rows() != n_v_ || R.cols() != n_v_)
        throw DimensionError("vec_maps: pack dimension mismatch");
    Eigen::VectorXd out(size_);
    for (int j = 0; j < n_w_; ++j)
        for (int i = j; i < n_w_; ++i) out[q_index(i, j)] = Q(i, j);
    for (int j = 0; j < n_v_; ++j)
        for (int i = j; i < n_v_; ++i) out[r_index(i, j)] = R(i, j);
    return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> UniqueCovMap::unpack(
    const Eigen::VectorXd& values) const {
    if (values.size() != size_) throw DimensionError("vec_maps: unpack length mismatch");
    Eigen::MatrixXd Q(n_w_, n_w_), R(n_v_, n_v_);
    for (int j = 0; j < n_w_; ++j)
        for (int i = j; i < n_w_; ++i) Q(i, j) = Q(j, i) = values[q_index(i, j)];
    for (int j = 0; j < n_v_; ++j)
        for (int i = j; i < n_v_; ++i) R(i, j) = R(j, i) = values[r_index(i, j)];
    return {Q, R};
}

std::string UniqueCovMap::label(int index) const {
    const int nq = n_w_ * (n_w_ + 1) / 2;
    const char* name = index < nq ? "Q" : "R";
    const int n = index < nq ? n_w_ : n_v_;
    int pos = index < nq ? index : index - nq;
    if (n == 1) return name;
    // Invert the column-major lower-triangle ordering.
    int j = 0;
    while (pos >= n - j) {
        pos -= n - j;
        ++j;
    }
    const int i = j + pos;
    // Stored from the lower triangle, printed with the conventional
    // upper-triangle name, e.g. the (2,1) slot of R is labeled R(1,2).
    return std::string(name) + "(" + std::to_string(j + 1) + "," + std::to_string(i + 1) + ")";
}

Eigen::SparseMatrix<double> replication_matrix(int n_w, int n_v, int P) {
    if (P < 1) throw DimensionError("vec_maps: replication matrix needs P >= 1");
    const UniqueCovMap map(n_w, n_v);
    const int m = stacked_noise_dim(n_w, n_v, P);

    // unique_of(r, c): packed index of the covariance entry at position
    // (r, c) of blkdiag(I_{P-1} (x) Q, I_P (x) R), or -1 where the entry is
    // structurally zero (cross-terms between distinct samples).
    const int w_span = (P - 1) * n_w;
    auto unique_of = [&](int r, int c) -> int {
        if (r < w_span && c < w_span) {
            if (r / n_w != c / n_w) return -1;
            return map.q_index(r % n_w, c % n_w);
        }
        if (r >= w_span && c >= w_span) {
            const int rv = r - w_span, cv = c - w_span;
            if (rv / n_v != cv / n_v) return -1;
            return map.r_index(rv % n_v, cv % n_v);
        }
        return -1;
    };

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>((P - 1) * n_w * n_w + P * n_v * n_v));
    for (int c = 0; c < m; ++c)
        for (int r = 0; r < m; ++r) {
            const int u = unique_of(r, c);
            if (u >= 0) triplets.emplace_back(c * m + r, u, 1.0);
        }
    Eigen::SparseMatrix<double> psi(m * m, map.size());
    psi.setFromTriplets(triplets.begin(), triplets.end());
    return psi;
}

Eigen::SparseMatrix<double> unification_matrix(int m) {
    if (m < 1) throw DimensionError("vec_maps: unification matrix needs m >= 1");
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(m * (m + 1) / 2));
    int row = 0;
    for (int j = 0; j < m; ++j)
        for (int i = j; i < m; ++i) triplets.emplace_back(row++, j * m + i, 1.0);
    Eigen::SparseMatrix<double> xi(m * (m + 1) / 2, m * m);
    xi.setFromTriplets(triplets.begin(), triplets.end());
    return xi;
}

} // namespace mdm

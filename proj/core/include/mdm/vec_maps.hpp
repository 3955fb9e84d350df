#pragma once

#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mdm {

/// Column-major stacking of a matrix into a vector.
Eigen::VectorXd vec(const Eigen::MatrixXd& m);

/// Inverse of vec. Throws DimensionError if rows*cols != v.size().
Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols);

/// n-fold Kronecker power of a matrix (n >= 1).
Eigen::MatrixXd kron_power(const Eigen::MatrixXd& m, int n);

/// Index map between the vector of unique covariance entries and the pair
/// of symmetric matrices (Q, R) it packs. Ordering: the n_w(n_w+1)/2
/// lower-triangle entries of Q in column-major order, then the
/// n_v(n_v+1)/2 lower-triangle entries of R. With n_w = 1, n_v = 2 this
/// is [Q, R(1,1), R(1,2), R(2,2)].
class UniqueCovMap {
public:
    UniqueCovMap(int n_w, int n_v);

    int n_w() const { return n_w_; }
    int n_v() const { return n_v_; }
    int size() const { return size_; }

    Eigen::VectorXd pack(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) const;
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> unpack(const Eigen::VectorXd& values) const;

    /// Human-readable name of entry i: "Q" / "R" for scalar blocks,
    /// "Q(i,j)" / "R(i,j)" (1-based, row >= col) otherwise.
    std::string label(int i) const;

    /// Position of Q(i,j) (0-based, any order of i,j) in the packed vector.
    int q_index(int i, int j) const;
    /// Position of R(i,j) in the packed vector.
    int r_index(int i, int j) const;

private:
    int n_w_;
    int n_v_;
    int size_;
};

/// Replication matrix: 0/1 map from the unique Q/R entries to the
/// vectorized covariance of the stacked noise vector
/// [w_0..w_{P-2}; v_0..v_{P-1}], whose covariance is
/// blkdiag(I_{P-1} (x) Q, I_P (x) R). Rows corresponding to
/// cross-covariances between distinct noise samples are all-zero.
/// Shape ((P-1)n_w + P n_v)^2 x (n_w(n_w+1)/2 + n_v(n_v+1)/2).
Eigen::SparseMatrix<double> replication_matrix(int n_w, int n_v, int P);

/// Unification matrix: 0/1 selector with one 1 per row that extracts the
/// lower-triangle entries (column-major) of a vectorized m x m matrix.
/// Shape m(m+1)/2 x m^2.
Eigen::SparseMatrix<double> unification_matrix(int m);

/// Dimension of the stacked noise vector the replication matrix addresses.
inline int stacked_noise_dim(int n_w, int n_v, int P) { return (P - 1) * n_w + P * n_v; }

} // namespace mdm

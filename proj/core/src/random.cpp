#include "mdm/random.hpp"

#include <cmath>

#include "mdm/errors.hpp"

namespace mdm {

std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double GaussianSampler::uniform01() {
    // 53-bit mantissa draw in (0, 1].
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53;
}

double GaussianSampler::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Eigen::VectorXd GaussianSampler::next_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = next();
    return v;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols()) throw DimensionError(std::string(what) + ": not square");
    if (!m.isApprox(m.transpose(), 1e-12))
        throw NotPsdError(std::string(what) + ": not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues();
    const double scale = ev.size() ? std::max(ev.cwiseAbs().maxCoeff(), 1.0) : 1.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -1e-12 * scale)
            throw NotPsdError(std::string(what) + ": negative eigenvalue " + std::to_string(ev[i]));
        ev[i] = ev[i] > 0.0 ? std::sqrt(ev[i]) : 0.0;
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace mdm

#include "mdm/model.hpp"

#include <sstream>

#include <Eigen/SVD>

#include "mdm/errors.hpp"
#include "mdm/random.hpp"

namespace mdm {

LtvModel make_model(int n_x, int n_w, int n_v,
                    std::vector<Eigen::MatrixXd> F, std::vector<Eigen::MatrixXd> G,
                    std::vector<Eigen::MatrixXd> E, std::vector<Eigen::MatrixXd> H,
                    std::vector<Eigen::MatrixXd> D) {
    LtvModel m;
    m.n_x = n_x;
    m.n_w = n_w;
    m.n_v = n_v;
    m.F = std::move(F);
    m.G = std::move(G);
    m.E = std::move(E);
    m.H = std::move(H);
    m.D = std::move(D);
    m.n_z.reserve(m.H.size());
    for (const auto& Hk : m.H) m.n_z.push_back(static_cast<int>(Hk.rows()));
    m.n_u.reserve(m.G.size());
    for (const auto& Gk : m.G) m.n_u.push_back(static_cast<int>(Gk.cols()));
    return m;
}

std::string ValidationReport::to_string() const {
    if (ok()) return "ok";
    std::ostringstream os;
    for (const auto& issue : issues) os << "k=" << issue.k << ": " << issue.what << "\n";
    return os.str();
}

namespace {

void check_matrix(ValidationReport& rep, const Eigen::MatrixXd& m, int k,
                  const char* name, Eigen::Index rows, Eigen::Index cols) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << name << " is " << m.rows() << "x" << m.cols() << ", declared " << rows << "x"
           << cols;
        rep.issues.push_back({k, os.str()});
        return;
    }
    if (!m.allFinite()) rep.issues.push_back({k, std::string(name) + " has a non-finite entry"});
}

} // namespace

ValidationReport validate(const LtvModel& model) {
    ValidationReport rep;
    const int tau = model.tau();
    if (static_cast<int>(model.G.size()) != tau || static_cast<int>(model.E.size()) != tau ||
        static_cast<int>(model.n_u.size()) != tau) {
        rep.issues.push_back({-1, "F, G, E, n_u must all have length tau"});
        return rep;
    }
    if (static_cast<int>(model.H.size()) != tau + 1 ||
        static_cast<int>(model.D.size()) != tau + 1 ||
        static_cast<int>(model.n_z.size()) != tau + 1) {
        rep.issues.push_back({-1, "H, D, n_z must all have length tau+1"});
        return rep;
    }
    for (int k = 0; k < tau; ++k) {
        check_matrix(rep, model.F[k], k, "F", model.n_x, model.n_x);
        check_matrix(rep, model.G[k], k, "G", model.n_x, model.n_u[k]);
        check_matrix(rep, model.E[k], k, "E", model.n_x, model.n_w);
    }
    for (int k = 0; k <= tau; ++k) {
        check_matrix(rep, model.H[k], k, "H", model.n_z[k], model.n_x);
        check_matrix(rep, model.D[k], k, "D", model.n_z[k], model.n_v);
    }
    return rep;
}

Eigen::MatrixXd observability_stack(const LtvModel& model, int k, int depth) {
    if (depth < 1) throw DimensionError("model: observability depth must be >= 1");
    if (k < 0 || k + depth - 1 > model.tau())
        throw DataError("model: observability window [" + std::to_string(k) + ", " +
                        std::to_string(k + depth - 1) + "] exceeds horizon");
    int rows = 0;
    for (int i = 0; i < depth; ++i) rows += model.n_z[k + i];
    Eigen::MatrixXd stack(rows, model.n_x);
    Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(model.n_x, model.n_x);
    int r = 0;
    for (int i = 0; i < depth; ++i) {
        stack.middleRows(r, model.n_z[k + i]) = model.H[k + i] * prod;
        r += model.n_z[k + i];
        if (i + 1 < depth) prod = model.F[k + i] * prod;
    }
    return stack;
}

std::vector<bool> check_observability(const LtvModel& model, int depth) {
    if (depth < 1) throw DimensionError("model: observability depth must be >= 1");
    std::vector<bool> result;
    for (int k = 0; k + depth - 1 <= model.tau(); ++k) {
        const Eigen::MatrixXd stack = observability_stack(model, k, depth);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(stack);
        const double tol = std::max(stack.rows(), stack.cols()) *
                           std::numeric_limits<double>::epsilon() *
                           (svd.singularValues().size() ? svd.singularValues()[0] : 0.0);
        const int rank = static_cast<int>((svd.singularValues().array() > tol).count());
        result.push_back(rank == model.n_x);
    }
    return result;
}

Trajectory simulate(const LtvModel& model, const NoiseSpec& noise,
                    const Eigen::VectorXd& x0_mean, const Eigen::MatrixXd& x0_var,
                    const std::vector<Eigen::VectorXd>& controls, std::uint64_t seed) {
    const auto report = validate(model);
    if (!report.ok()) throw DimensionError("model: invalid model: " + report.to_string());
    const int tau = model.tau();
    if (static_cast<int>(controls.size()) != tau)
        throw DataError("model: controls must have length tau");
    for (int k = 0; k < tau; ++k)
        if (controls[k].size() != model.n_u[k])
            throw DataError("model: control dimension mismatch at k=" + std::to_string(k));

    const Eigen::MatrixXd x0_sqrt = psd_sqrt(x0_var, "model: x0_var");
    const Eigen::MatrixXd q_sqrt = psd_sqrt(noise.Q, "model: Q");
    const Eigen::MatrixXd r_sqrt = psd_sqrt(noise.R, "model: R");

    GaussianSampler rng(seed);
    Trajectory traj;
    traj.x.reserve(tau + 1);
    traj.z.reserve(tau + 1);
    traj.u = controls;
    traj.w.reserve(tau);
    traj.v.reserve(tau + 1);

    traj.x.push_back(x0_mean + x0_sqrt * rng.next_vector(model.n_x));
    for (int k = 0; k <= tau; ++k) {
        traj.v.push_back(r_sqrt * rng.next_vector(model.n_v));
        traj.z.push_back(model.H[k] * traj.x[k] + model.D[k] * traj.v[k]);
        if (k < tau) {
            traj.w.push_back(q_sqrt * rng.next_vector(model.n_w));
            traj.x.push_back(model.F[k] * traj.x[k] + model.G[k] * controls[k] +
                             model.E[k] * traj.w[k]);
        }
    }
    return traj;
}

} // namespace mdm

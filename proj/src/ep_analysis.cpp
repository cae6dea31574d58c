#include "epcluster/ep_analysis.hpp"
#include "epcluster/error.hpp"

#include <Eigen/SVD>

#include <limits>

namespace epcluster {

std::optional<int> nilpotency_index(const Eigen::MatrixXcd& h, double tol) {
    if (!(tol > 0.0)) {
        throw InvalidArgument("nilpotency_index: tol must be positive");
    }
    const Eigen::Index n = h.rows();
    const Eigen::MatrixXd mod = h.cwiseAbs();
    Eigen::MatrixXcd power = h;
    Eigen::MatrixXd mod_power = mod;
    for (Eigen::Index m = 1; m <= n; ++m) {
        if (power.norm() <= tol * mod_power.norm()) {
            return static_cast<int>(m);
        }
        if (m < n) {
            power = power * h;
            mod_power = mod_power * mod;
        }
    }
    return std::nullopt;
}

std::optional<int> nilpotency_index(const Hamiltonian& h, double tol) {
    return nilpotency_index(h.matrix, tol);
}

EpReport coalescence_metrics(const Spectrum& s, const FidelityMatrix& f) {
    if (f.dim() != s.dim()) {
        throw InvalidArgument("coalescence_metrics: spectrum and fidelity matrix dimensions differ");
    }
    EpReport r;
    const Eigen::Index n = s.dim();
    if (n < 2) {
        return r;
    }
    r.min_eigenvalue_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            r.min_eigenvalue_gap = std::min(r.min_eigenvalue_gap, std::abs(s.eigenvalues(i) - s.eigenvalues(j)));
            r.max_pair_fidelity = std::max(r.max_pair_fidelity, f(i, j));
        }
    }
    return r;
}

Eigen::VectorXcd base_state_estimate(const Hamiltonian& h, const Spectrum& s, double nil_tol) {
    const Eigen::Index n = h.dim();
    if (s.eigenvectors.rows() != n) {
        throw InvalidArgument("base_state_estimate: spectrum dimension does not match Hamiltonian");
    }
    Eigen::VectorXcd out;
    if (nilpotency_index(h, nil_tol)) {
        const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h.matrix, Eigen::ComputeFullV);
        out = svd.matrixV().col(n - 1); // singular values are sorted descending
    } else {
        out = Eigen::VectorXcd::Zero(n);
        const auto ref = s.state(0);
        for (Eigen::Index j = 0; j < s.dim(); ++j) {
            const Complex overlap = ref.dot(s.state(j)); // <psi_0|psi_j>
            const double mag = std::abs(overlap);
            const Complex rot = mag > 0.0 ? std::conj(overlap) / mag : Complex(1.0);
            out += rot * s.state(j);
        }
        if (out.norm() == 0.0) {
            out = s.state(0);
        }
    }
    out.normalize();
    // Same phase convention as eigenvectors: largest entry real and positive.
    Eigen::Index arg = 0;
    out.cwiseAbs().maxCoeff(&arg);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(out(i)) >= std::abs(out(arg)) * (1.0 - 1e-12)) {
            arg = i;
            break;
        }
    }
    out *= std::conj(out(arg)) / std::abs(out(arg));
    return out;
}

EpReport ep_report(const Hamiltonian& h, const Spectrum& s, const FidelityMatrix& f, double nil_tol) {
    EpReport r = coalescence_metrics(s, f);
    r.nilpotency_index = nilpotency_index(h, nil_tol);
    r.base_state = base_state_estimate(h, s, nil_tol);
    return r;
}

} // namespace epcluster

#include "epcluster/lattice.hpp"
#include "epcluster/error.hpp"

#include <cmath>
#include <string>

namespace epcluster {

namespace {

void require_sites(int n, const char* what) {
    if (n < 2) {
        throw InvalidArgument(std::string(what) + ": need at least 2 sites, got " + std::to_string(n));
    }
}

void require_length(const std::vector<double>& profile, int n, const char* name) {
    if (static_cast<int>(profile.size()) != n) {
        throw InvalidArgument(std::string("dimension mismatch: ") + name + " has length " +
                              std::to_string(profile.size()) + ", expected n_sites = " + std::to_string(n));
    }
    for (double v : profile) {
        if (!std::isfinite(v)) {
            throw InvalidArgument(std::string(name) + " contains a non-finite value");
        }
    }
}

} // namespace

Boundary boundary_from_string(std::string_view name) {
    if (name == "open") return Boundary::open;
    if (name == "ring") return Boundary::ring;
    throw InvalidArgument("unknown boundary '" + std::string(name) + "' (expected open|ring)");
}

std::string_view to_string(Boundary b) {
    return b == Boundary::open ? "open" : "ring";
}

void LatticeSpec::validate() const {
    require_sites(n_sites, "LatticeSpec");
    require_length(forward_hops, n_sites, "forward_hops");
    require_length(backward_hops, n_sites, "backward_hops");
    require_length(gain_loss, n_sites, "gain_loss");
}

Hamiltonian build_hamiltonian(const LatticeSpec& spec) {
    spec.validate();
    const Eigen::Index n = spec.n_sites;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        h(i, i + 1) = spec.forward_hops[i];
        h(i + 1, i) = spec.backward_hops[i];
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) = Complex(0.0, spec.gain_loss[i]);
    }
    if (spec.boundary == Boundary::ring) {
        // For n == 2 the closing bond lands on the same entries as the interior bond.
        h(n - 1, 0) += spec.forward_hops[n - 1];
        h(0, n - 1) += spec.backward_hops[n - 1];
    }
    return Hamiltonian{std::move(h)};
}

std::vector<double> profile_uniform(int n, double value) {
    require_sites(n, "profile_uniform");
    return std::vector<double>(static_cast<std::size_t>(n), value);
}

std::vector<double> profile_sin_squared(int n, double offset, double divisor) {
    require_sites(n, "profile_sin_squared");
    if (divisor == 0.0) {
        throw InvalidArgument("profile_sin_squared: divisor must be nonzero");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int m = 1; m <= n; ++m) {
        const double s = std::sin(m / divisor);
        out[m - 1] = offset + s * s;
    }
    return out;
}

std::vector<double> profile_staggered(int n, double gamma) {
    require_sites(n, "profile_staggered");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int m = 1; m <= n; ++m) {
        out[m - 1] = (m % 2 == 0) ? gamma : 0.0 - gamma; // no -0.0 for gamma = 0
    }
    return out;
}

} // namespace epcluster

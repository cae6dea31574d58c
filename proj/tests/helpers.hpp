#pragma once

#include "epcluster/lattice.hpp"

#include <cmath>
#include <random>

namespace testing_support {

using namespace epcluster;

inline LatticeSpec uniform_chain(int n, double t, double tp, Boundary b = Boundary::open, double gamma = 0.0) {
    return LatticeSpec{n, profile_uniform(n, t), profile_uniform(n, tp), profile_uniform(n, gamma), b};
}

inline LatticeSpec dimer(double t, double gamma) {
    return LatticeSpec{2, {t, 0.0}, {t, 0.0}, {gamma, -gamma}, Boundary::open};
}

/// Hops in [-1, 1], gamma in [-0.5, 0.5], either boundary.
inline LatticeSpec random_spec(std::mt19937_64& rng, int max_n) {
    std::uniform_int_distribution<int> size(2, max_n);
    std::uniform_real_distribution<double> hop(-1.0, 1.0), gam(-0.5, 0.5);
    const int n = size(rng);
    LatticeSpec s{n, {}, {}, {}, (rng() & 1) ? Boundary::ring : Boundary::open};
    for (int i = 0; i < n; ++i) {
        s.forward_hops.push_back(hop(rng));
        s.backward_hops.push_back(hop(rng));
        s.gain_loss.push_back(gam(rng));
    }
    return s;
}

/// Open chain eigenvalues 2 sqrt(t t') cos(k pi / (N + 1)), ascending.
inline std::vector<double> chain_eigenvalues(int n, double t, double tp) {
    std::vector<double> out;
    for (int k = n; k >= 1; --k) out.push_back(2.0 * std::sqrt(t * tp) * std::cos(k * M_PI / (n + 1)));
    return out;
}

} // namespace testing_support

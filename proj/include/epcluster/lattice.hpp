#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string_view>
#include <vector>

namespace epcluster {

using Complex = std::complex<double>;

enum class Boundary { open, ring };

Boundary boundary_from_string(std::string_view name);
std::string_view to_string(Boundary b);

/**
 Declarative description of a 1D lattice with nonreciprocal nearest-neighbour
 hopping and on-site gain/loss.

 Profiles are stored 0-based: forward_hops[n] is the hop from site n+1 to site n
 in the 1-based labelling used by docs and output files. With an open boundary the
 last entries of forward_hops/backward_hops are ignored.
 */
struct LatticeSpec {
    int n_sites = 0;
    std::vector<double> forward_hops;  ///< t_n, couples psi_{n+1} into row n
    std::vector<double> backward_hops; ///< t'_n, couples psi_n into row n+1
    std::vector<double> gain_loss;     ///< gamma_n, diagonal i*gamma_n
    Boundary boundary = Boundary::open;

    /// Throws InvalidArgument when n_sites < 2 or a profile has the wrong length.
    void validate() const;
};

/// Dense N x N matrix of the lattice operator.
struct Hamiltonian {
    Eigen::MatrixXcd matrix;

    Eigen::Index dim() const { return matrix.rows(); }
    const Complex& operator()(Eigen::Index r, Eigen::Index c) const { return matrix(r, c); }
};

/// H[n][n+1] = t_n, H[n+1][n] = t'_n, H[n][n] = i*gamma_n; ring adds
/// H[N][1] = t_N and H[1][N] = t'_N (1-based).
Hamiltonian build_hamiltonian(const LatticeSpec& spec);

std::vector<double> profile_uniform(int n, double value);

/// Entry m (1-based) is offset + sin^2(m / divisor), argument in radians.
std::vector<double> profile_sin_squared(int n, double offset, double divisor);

/// Entry m (1-based) is (-1)^m * gamma.
std::vector<double> profile_staggered(int n, double gamma);

} // namespace epcluster

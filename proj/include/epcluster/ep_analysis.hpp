#pragma once

#include "epcluster/eigensolver.hpp"
#include "epcluster/fidelity.hpp"

#include <optional>

namespace epcluster {

/// Distance-to-exceptional-point diagnostics for one Hamiltonian.
struct EpReport {
    std::optional<int> nilpotency_index;
    double min_eigenvalue_gap = 0.0;
    double max_pair_fidelity = 0.0;
    Eigen::VectorXcd base_state;
};

/**
 Smallest m <= N with ||H^m||_F <= tol * || |H|^m ||_F, where |H| is the entrywise
 modulus. The reference scale is the size of the rounding error incurred when
 forming H^m, which makes the test invariant under H -> alpha H. Returns nullopt
 when H is not nilpotent at this tolerance. The zero matrix has index 1.
 */
std::optional<int> nilpotency_index(const Eigen::MatrixXcd& h, double tol = 1e-12);
std::optional<int> nilpotency_index(const Hamiltonian& h, double tol = 1e-12);

/// Fills min_eigenvalue_gap (min |lambda_i - lambda_j|) and max_pair_fidelity (max
/// off-diagonal F). For N = 1 both are 0.
EpReport coalescence_metrics(const Spectrum& s, const FidelityMatrix& f);

/// Unit kernel vector of H when H is nilpotent (the exceptional state); otherwise the
/// normalized mean of the eigenvectors after rotating each so that its overlap with
/// eigenvector 0 is real and non-negative.
Eigen::VectorXcd base_state_estimate(const Hamiltonian& h, const Spectrum& s, double nil_tol = 1e-12);

/// All of the above in one report.
EpReport ep_report(const Hamiltonian& h, const Spectrum& s, const FidelityMatrix& f, double nil_tol = 1e-12);

} // namespace epcluster

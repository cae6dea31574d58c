#pragma once

#include "epcluster/lattice.hpp"

#include <Eigen/Dense>

namespace epcluster {

struct EigOptions {
    double tol = 1e-14;      ///< QR deflation threshold, relative to neighbouring diagonal entries
    int sweeps_per_dim = 30; ///< iteration budget is sweeps_per_dim * N QR sweeps
};

/**
 Full eigendecomposition of a dense complex matrix.

 Eigenvalues are sorted ascending by real part; real parts that agree within
 1e-10 * max(1, max|lambda|) are treated as ties and ordered ascending by imaginary
 part. Column j of `eigenvectors` pairs with eigenvalue j, has unit 2-norm and is
 phase-fixed so that its largest-magnitude entry is real and positive.
 */
struct Spectrum {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd eigenvectors;
    Eigen::VectorXd residuals; ///< ||H v_j - lambda_j v_j||_2

    Eigen::Index dim() const { return eigenvalues.size(); }
    auto state(Eigen::Index j) const { return eigenvectors.col(j); }
};

/// Diagonal similarity D^{-1} A D with power-of-two scale factors that equalizes
/// row and column norms. Eigenvectors of A are D times those of `matrix`.
struct BalancedMatrix {
    Eigen::MatrixXcd matrix;
    Eigen::VectorXd scale;
};

BalancedMatrix balance(const Eigen::MatrixXcd& a);

/// A = Z T Z^H with T upper triangular and Z unitary.
struct SchurForm {
    Eigen::MatrixXcd t;
    Eigen::MatrixXcd z;
    int sweeps = 0;
};

/// Householder reduction to upper Hessenberg form followed by implicitly shifted
/// complex QR (Wilkinson shifts, exceptional shift every 10 stalled sweeps).
/// Throws NumericalError when the sweep budget is exhausted.
SchurForm complex_schur(const Eigen::MatrixXcd& a, const EigOptions& opts = {});

/// Right eigenvectors of an upper-triangular matrix by back-substitution, one per
/// column, not normalized. Near-equal diagonal entries are separated by a
/// perturbation of order eps * ||T||, and columns are rescaled to avoid overflow.
Eigen::MatrixXcd triangular_eigenvectors(const Eigen::MatrixXcd& t);

Spectrum eig(const Eigen::MatrixXcd& a, const EigOptions& opts = {});
Spectrum eig(const Hamiltonian& h, const EigOptions& opts = {});

/// Permutes eigenpairs (and residuals) into canonical order; see Spectrum.
Spectrum sort_states(Eigen::VectorXcd eigenvalues, Eigen::MatrixXcd eigenvectors,
                     Eigen::VectorXd residuals);

/// Recomputes ||H v_j - lambda_j v_j||_2 for every pair.
Eigen::VectorXd residual_check(const Eigen::MatrixXcd& h, const Spectrum& s);
Eigen::VectorXd residual_check(const Hamiltonian& h, const Spectrum& s);

/// Acceptance bound on residuals: 1e-8 * max(1, ||H||_F).
double residual_bound(const Eigen::MatrixXcd& h);

} // namespace epcluster

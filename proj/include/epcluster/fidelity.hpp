#pragma once

#include "epcluster/eigensolver.hpp"

#include <Eigen/Dense>

#include <vector>

namespace epcluster {

/// Symmetric matrix of pairwise eigenstate fidelities with unit diagonal.
struct FidelityMatrix {
    Eigen::MatrixXd values;

    Eigen::Index dim() const { return values.rows(); }
    double operator()(Eigen::Index n, Eigen::Index m) const { return values(n, m); }
};

/**
 Fidelity features of every state against a set of (nearly) mutually orthogonal
 reference states.

 reference_indices are 0-based positions in the sorted Spectrum; row n of
 `features` is (F(n, ref_1), ..., F(n, ref_N')).
 */
struct FeatureSpace {
    std::vector<int> reference_indices;
    Eigen::MatrixXd features; ///< N x N'
    double orthogonality_threshold = 0.05;

    Eigen::Index states() const { return features.rows(); }
    Eigen::Index dimension() const { return features.cols(); }
};

inline constexpr double kDefaultOrthogonalityThreshold = 0.05;

/// |<v|w>|^2 / (<v|v><w|w>). Invariant under rescaling and phase of either argument;
/// fidelity(v, w) == fidelity(w, v) bit-for-bit. Throws InvalidArgument on zero
/// vectors or length mismatch.
double fidelity(const Eigen::Ref<const Eigen::VectorXcd>& v, const Eigen::Ref<const Eigen::VectorXcd>& w);

FidelityMatrix fidelity_matrix(const Spectrum& s);

/// F_nm for n < m in lexicographic (n, m) order; N(N-1)/2 values.
std::vector<double> offdiagonal_set(const FidelityMatrix& f);

/// Greedy scan in Spectrum order: state 0 is always admitted, state n joins if its
/// fidelity with every admitted reference is <= epsilon. Result is ascending.
std::vector<int> select_references(const FidelityMatrix& f, double epsilon = kDefaultOrthogonalityThreshold);

FeatureSpace feature_vectors(const FidelityMatrix& f, const std::vector<int>& refs,
                             double epsilon = kDefaultOrthogonalityThreshold);

} // namespace epcluster

#pragma once

#include "epcluster/clustering.hpp"
#include "epcluster/eigensolver.hpp"
#include "epcluster/fidelity.hpp"

#include <Eigen/Dense>

#include <vector>

namespace epcluster {

/// State in the site basis at time `time`.
struct WavePacket {
    Eigen::VectorXcd amplitudes;
    double time = 0.0;

    /// Throws InvalidArgument for an empty or all-zero amplitude vector.
    void validate() const;
};

/// Reciprocal-condition threshold below which the eigenbasis counts as defective.
inline constexpr double kDefectiveBasisRcond = 1e-12;

/// Solves V c = psi0 with partially pivoted LU. Throws NumericalError when V is
/// numerically singular (rcond estimate below 1e-12, typical near an exceptional
/// point) or the reconstruction misses psi0 by more than 1e-8 relative.
Eigen::VectorXcd expand(const WavePacket& psi0, const Spectrum& s);

/// c_n -> c_n exp(-i E_n t). Throws NumericalError if |Im E_n| * |t| > 700 for any n.
Eigen::VectorXcd evolve_coefficients(const Spectrum& s, const Eigen::VectorXcd& c, double t);

/// Psi(t) = sum_n c_n exp(-i E_n t) psi_n.
WavePacket evolve(const Spectrum& s, const Eigen::VectorXcd& c, double t);

struct PacketClass {
    int cluster = 0;
    Eigen::VectorXd feature; ///< F(Psi, reference state a) for each reference
};

/// Fidelity of psi0 with each reference eigenstate, then nearest-centroid lookup.
PacketClass classify_packet(const WavePacket& psi0, const Spectrum& s, const FeatureSpace& refs,
                            const ClusterModel& model);

/// One row of a time trace.
struct TraceSample {
    double t = 0.0;
    Eigen::VectorXd densities;  ///< |Psi_n(t)|^2 per site
    double norm = 0.0;          ///< ||Psi(t)||_2
    Eigen::VectorXd fidelities; ///< F(Psi(t), psi_j), empty unless requested
};

/// Evaluates evolve() at each time; samples are independent and may be computed by
/// up to `workers` threads, output order always follows `times`.
std::vector<TraceSample> time_trace(const Spectrum& s, const Eigen::VectorXcd& c, const std::vector<double>& times,
                                    bool with_fidelities, int workers = 1);

} // namespace epcluster

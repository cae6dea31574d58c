#include "epcluster/dynamics.hpp"
#include "epcluster/error.hpp"
#include "epcluster/parallel.hpp"

#include <cmath>
#include <sstream>

namespace epcluster {

void WavePacket::validate() const {
    if (amplitudes.size() == 0 || amplitudes.norm() == 0.0) {
        throw InvalidArgument("wave packet amplitudes must be nonzero");
    }
    if (!amplitudes.allFinite()) {
        throw InvalidArgument("wave packet amplitudes must be finite");
    }
}

Eigen::VectorXcd expand(const WavePacket& psi0, const Spectrum& s) {
    psi0.validate();
    if (psi0.amplitudes.size() != s.eigenvectors.rows()) {
        throw InvalidArgument("expand: wave packet length does not match spectrum dimension");
    }
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(s.eigenvectors);
    const double rcond = lu.rcond();
    if (!(rcond >= kDefectiveBasisRcond)) {
        std::ostringstream msg;
        msg << "expand: eigenbasis is numerically defective (rcond estimate " << rcond << ")";
        throw NumericalError(msg.str());
    }
    Eigen::VectorXcd c = lu.solve(psi0.amplitudes);
    const double miss = (s.eigenvectors * c - psi0.amplitudes).norm();
    if (!(miss <= 1e-8 * psi0.amplitudes.norm())) {
        std::ostringstream msg;
        msg << "expand: reconstruction error " << miss << " exceeds tolerance";
        throw NumericalError(msg.str());
    }
    return c;
}

Eigen::VectorXcd evolve_coefficients(const Spectrum& s, const Eigen::VectorXcd& c, double t) {
    if (c.size() != s.dim()) {
        throw InvalidArgument("evolve: coefficient count does not match spectrum dimension");
    }
    Eigen::VectorXcd out(c.size());
    for (Eigen::Index n = 0; n < c.size(); ++n) {
        const Complex e = s.eigenvalues(n);
        if (std::abs(e.imag()) * std::abs(t) > 700.0) {
            std::ostringstream msg;
            msg << "evolve: |Im E| * t = " << std::abs(e.imag()) * std::abs(t) << " exceeds 700 (overflow guard)";
            throw NumericalError(msg.str());
        }
        out(n) = c(n) * std::exp(Complex(0.0, -1.0) * e * t);
    }
    return out;
}

WavePacket evolve(const Spectrum& s, const Eigen::VectorXcd& c, double t) {
    return WavePacket{s.eigenvectors * evolve_coefficients(s, c, t), t};
}

PacketClass classify_packet(const WavePacket& psi0, const Spectrum& s, const FeatureSpace& refs,
                            const ClusterModel& model) {
    psi0.validate();
    if (psi0.amplitudes.size() != s.eigenvectors.rows()) {
        throw InvalidArgument("classify_packet: wave packet length does not match spectrum dimension");
    }
    PacketClass out;
    out.feature.resize(static_cast<Eigen::Index>(refs.reference_indices.size()));
    for (std::size_t a = 0; a < refs.reference_indices.size(); ++a) {
        const int r = refs.reference_indices[a];
        if (r < 0 || r >= s.dim()) {
            throw InvalidArgument("classify_packet: reference index out of range");
        }
        out.feature(static_cast<Eigen::Index>(a)) = fidelity(psi0.amplitudes, s.state(r));
    }
    out.cluster = classify(model, out.feature);
    return out;
}

std::vector<TraceSample> time_trace(const Spectrum& s, const Eigen::VectorXcd& c, const std::vector<double>& times,
                                    bool with_fidelities, int workers) {
    std::vector<TraceSample> out(times.size());
    parallel_for(times.size(), workers, [&](std::size_t i) {
        const WavePacket psi = evolve(s, c, times[i]);
        TraceSample& row = out[i];
        row.t = times[i];
        row.densities = psi.amplitudes.cwiseAbs2();
        row.norm = psi.amplitudes.norm();
        if (with_fidelities) {
            row.fidelities.resize(s.dim());
            for (Eigen::Index j = 0; j < s.dim(); ++j) {
                row.fidelities(j) = row.norm > 0.0 ? fidelity(psi.amplitudes, s.state(j)) : 0.0;
            }
        }
    });
    return out;
}

} // namespace epcluster

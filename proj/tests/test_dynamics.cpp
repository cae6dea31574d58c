#include "helpers.hpp"

#include "epcluster/dynamics.hpp"
#include "epcluster/error.hpp"

#include <doctest.h>

using namespace epcluster;
using namespace testing_support;

namespace {

WavePacket site(int n, int at) {
    WavePacket p{Eigen::VectorXcd::Zero(n), 0.0};
    p.amplitudes(at) = 1.0;
    return p;
}

} // namespace

TEST_CASE("expanding an eigenvector gives a unit coefficient") {
    const Spectrum s = eig(build_hamiltonian(uniform_chain(12, 0.1, 0.05)));
    for (int j = 0; j < 12; ++j) {
        const Eigen::VectorXcd c = expand({s.state(j), 0.0}, s);
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(12);
        e(j) = 1.0;
        CHECK((c - e).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("Hermitian expansion equals orthogonal projection") {
    const Spectrum s = eig(build_hamiltonian(uniform_chain(10, 0.3, 0.3, Boundary::open, 0.0)));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    WavePacket p{Eigen::VectorXcd(10), 0.0};
    for (int i = 0; i < 10; ++i) p.amplitudes(i) = Complex(g(rng), g(rng));
    const Eigen::VectorXcd c = expand(p, s);
    const Eigen::VectorXcd proj = s.eigenvectors.adjoint() * p.amplitudes;
    CHECK((c - proj).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("skin chain expansion agrees with the normal equations") {
    const Spectrum s = eig(build_hamiltonian(uniform_chain(12, 0.1, 0.05)));
    const WavePacket p = site(12, 0);
    const Eigen::MatrixXcd& v = s.eigenvectors;
    const Eigen::VectorXcd ls = (v.adjoint() * v).ldlt().solve(v.adjoint() * p.amplitudes);
    CHECK((expand(p, s) - ls).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("evolution") {
    const Spectrum h = eig(build_hamiltonian(uniform_chain(12, 0.1, 0.1)));
    const WavePacket p = site(12, 0);
    const Eigen::VectorXcd c = expand(p, h);
    CHECK((evolve(h, c, 0.0).amplitudes - p.amplitudes).norm() <= 1e-8);
    for (double t = 0.0; t <= 100.0; t += 2.5) {
        const WavePacket q = evolve(h, c, t);
        CHECK(q.time == t);
        CHECK(std::abs(q.amplitudes.norm() - 1.0) <= 1e-8);
    }
}

TEST_CASE("gain-dominated state takes over") {
    LatticeSpec spec = uniform_chain(6, 0.1, 0.05);
    spec.gain_loss = {0.3, 0.0, -0.1, 0.0, 0.05, -0.2};
    const Spectrum s = eig(build_hamiltonian(spec));
    Eigen::Index top = 0;
    for (Eigen::Index j = 1; j < s.dim(); ++j)
        if (s.eigenvalues(j).imag() > s.eigenvalues(top).imag()) top = j;
    double second = -1e300;
    for (Eigen::Index j = 0; j < s.dim(); ++j)
        if (j != top) second = std::max(second, s.eigenvalues(j).imag());
    const double gap = s.eigenvalues(top).imag() - second;
    REQUIRE(gap > 1e-3);

    const WavePacket p{Eigen::VectorXcd::Ones(6) / std::sqrt(6.0), 0.0};
    const Eigen::VectorXcd c = expand(p, s);
    const double t = 10.5 / gap;
    CHECK(fidelity(evolve(s, c, t).amplitudes, s.state(top)) > 0.999);
}

TEST_CASE("defective basis and overflow are numerical errors") {
    const Spectrum ep = eig(build_hamiltonian(dimer(1.0, 1.0)));
    CHECK_THROWS_AS(expand(site(2, 0), ep), NumericalError);

    LatticeSpec spec = uniform_chain(3, 0.1, 0.1);
    spec.gain_loss = {1.0, 0.0, 0.0};
    const Spectrum s = eig(build_hamiltonian(spec));
    const Eigen::VectorXcd c = expand(site(3, 1), s);
    CHECK_THROWS_AS(evolve(s, c, 1000.0), NumericalError);
    CHECK_NOTHROW(evolve(s, c, 100.0));

    CHECK_THROWS_AS(expand({Eigen::VectorXcd::Zero(3), 0.0}, s), InvalidArgument);
    CHECK_THROWS_AS(expand(site(4, 0), s), InvalidArgument);
}

TEST_CASE("wave packet classification") {
    const Spectrum s = eig(build_hamiltonian(uniform_chain(80, 0.1, 0.05)));
    const FidelityMatrix f = fidelity_matrix(s);
    const FeatureSpace fs = feature_vectors(f, {0, 1}, 0.05);
    const ClusterModel m = kmeans(fs, 6, 7);

    for (int n : {0, 1, 17, 79}) {
        const PacketClass pc = classify_packet({s.state(n), 0.0}, s, fs, m);
        CHECK(pc.cluster == m.assignments[n]);
        CHECK((pc.feature - fs.features.row(n).transpose()).norm() <= 1e-12);
    }

    for (const WavePacket& p : {site(80, 0), WavePacket{Eigen::VectorXcd::Ones(80), 0.0}}) {
        const PacketClass pc = classify_packet(p, s, fs, m);
        int brute = 0;
        double best = 1e300;
        for (int c = 0; c < m.k; ++c) {
            double d = 0.0;
            for (int a = 0; a < 2; ++a) {
                const double want = fidelity(p.amplitudes, s.state(fs.reference_indices[a]));
                CHECK(pc.feature(a) == doctest::Approx(want).epsilon(1e-14));
                d += (want - m.centroids(c, a)) * (want - m.centroids(c, a));
            }
            if (d < best) best = d, brute = c;
        }
        CHECK(pc.cluster == brute);
    }

    // e_1 lands in the cluster whose members carry the most weight on site 1
    std::vector<double> weight(6, 0.0);
    std::vector<int> members(6, 0);
    for (int n = 0; n < 80; ++n) {
        weight[m.assignments[n]] += std::norm(s.eigenvectors(0, n));
        ++members[m.assignments[n]];
    }
    int edge = 0;
    for (int c = 1; c < 6; ++c)
        if (weight[c] / members[c] > weight[edge] / members[edge]) edge = c;
    CHECK(classify_packet(site(80, 0), s, fs, m).cluster == edge);
}

TEST_CASE("time traces are identical for any worker count") {
    LatticeSpec spec = uniform_chain(16, 0.1, 0.05);
    spec.gain_loss = profile_staggered(16, 0.02);
    const Spectrum s = eig(build_hamiltonian(spec));
    const Eigen::VectorXcd c = expand(site(16, 3), s);
    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) times.push_back(0.5 * i);
    const auto serial = time_trace(s, c, times, true, 1);
    const auto parallel = time_trace(s, c, times, true, 4);
    REQUIRE(serial.size() == times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(serial[i].t == times[i]);
        CHECK(serial[i].densities == parallel[i].densities);
        CHECK(serial[i].fidelities == parallel[i].fidelities);
        CHECK(serial[i].norm == parallel[i].norm);
        CHECK(serial[i].densities.sum() == doctest::Approx(serial[i].norm * serial[i].norm));
    }
    CHECK(time_trace(s, c, times, false, 2)[3].fidelities.size() == 0);
}

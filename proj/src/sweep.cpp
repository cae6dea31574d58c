#include "epcluster/sweep.hpp"
#include "epcluster/error.hpp"
#include "epcluster/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace epcluster {

SweepParameter sweep_parameter_from_string(std::string_view name) {
    if (name == "gamma_staggered") return SweepParameter::gamma_staggered;
    if (name == "backward_scale") return SweepParameter::backward_scale;
    throw InvalidArgument("unknown sweep parameter '" + std::string(name) +
                          "' (expected gamma_staggered|backward_scale)");
}

std::string_view to_string(SweepParameter p) {
    return p == SweepParameter::gamma_staggered ? "gamma_staggered" : "backward_scale";
}

void SweepSpec::validate() const {
    base.validate();
    if (grid.empty()) {
        throw InvalidArgument("sweep grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) {
            throw InvalidArgument("sweep grid contains a non-finite value");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw InvalidArgument("sweep grid must be strictly ascending");
        }
    }
    if (stages.kmeans && (stages.kmeans->k < 1 || stages.kmeans->k > base.n_sites)) {
        throw InvalidArgument("k exceeds state count (k = " + std::to_string(stages.kmeans->k) +
                              ", states = " + std::to_string(base.n_sites) + ")");
    }
}

std::vector<double> make_grid(double start, double stop, double step) {
    if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop)) {
        throw InvalidArgument("grid: step must be positive and bounds finite");
    }
    if (stop < start) {
        throw InvalidArgument("grid: stop must not be below start");
    }
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = start + static_cast<double>(i) * step;
    }
    return out;
}

LatticeSpec materialize(const SweepSpec& spec, double value) {
    LatticeSpec l = spec.base;
    switch (spec.parameter) {
    case SweepParameter::gamma_staggered:
        l.gain_loss = profile_staggered(l.n_sites, value);
        break;
    case SweepParameter::backward_scale:
        for (std::size_t i = 0; i < l.backward_hops.size(); ++i) {
            l.backward_hops[i] = value * l.forward_hops[i];
        }
        break;
    }
    return l;
}

namespace {

SweepRecord run_point(const SweepSpec& spec, double value) {
    SweepRecord rec;
    rec.parameter = value;
    const Hamiltonian h = build_hamiltonian(materialize(spec, value));
    const Spectrum s = eig(h, spec.eig);
    const FidelityMatrix f = fidelity_matrix(s);
    rec.fidelity_set = offdiagonal_set(f);

    const auto& st = spec.stages;
    if (st.densities) {
        rec.densities = density_table(s);
    }
    std::vector<int> selected;
    if (st.references || (st.kmeans && st.kmeans->references.empty())) {
        selected = select_references(f, spec.epsilon);
    }
    if (st.references) {
        rec.references = selected;
    }
    if (st.kmeans) {
        rec.cluster_references = st.kmeans->references.empty() ? selected : st.kmeans->references;
        const FeatureSpace fs = feature_vectors(f, rec.cluster_references, spec.epsilon);
        rec.clusters = kmeans(fs, st.kmeans->k, st.kmeans->seed, st.kmeans->options);
    }
    if (st.ep_report) {
        rec.ep = ep_report(h, s, f);
    }
    return rec;
}

} // namespace

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    SweepResult out;
    out.parameter = spec.parameter;
    out.stages = spec.stages;
    out.records.resize(spec.grid.size());
    parallel_for(spec.grid.size(), spec.workers, [&](std::size_t i) {
        try {
            out.records[i] = run_point(spec, spec.grid[i]);
        } catch (const NumericalError& e) {
            std::ostringstream msg;
            msg.precision(15);
            msg << "sweep failed at " << to_string(spec.parameter) << " = " << spec.grid[i] << ": " << e.what();
            throw NumericalError(msg.str());
        }
    });
    return out;
}

Eigen::MatrixXd density_table(const Spectrum& s) {
    const Eigen::Index n = s.dim();
    Eigen::MatrixXd d(n, s.eigenvectors.rows());
    for (Eigen::Index j = 0; j < n; ++j) {
        const double nrm = s.state(j).norm();
        d.row(j) = (s.state(j) / nrm).cwiseAbs2().transpose();
    }
    return d;
}

std::vector<std::pair<double, double>> min_fidelity_curve(const SweepResult& r) {
    if (!r.stages.fidelity_set) {
        throw InvalidArgument("min_fidelity_curve: fidelity_set stage was not enabled");
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(r.records.size());
    for (const auto& rec : r.records) {
        const double mn = rec.fidelity_set.empty()
                              ? 1.0
                              : *std::min_element(rec.fidelity_set.begin(), rec.fidelity_set.end());
        out.emplace_back(rec.parameter, mn);
    }
    return out;
}

} // namespace epcluster

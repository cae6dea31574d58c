#pragma once

#include "epcluster/clustering.hpp"
#include "epcluster/eigensolver.hpp"
#include "epcluster/ep_analysis.hpp"
#include "epcluster/fidelity.hpp"
#include "epcluster/lattice.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace epcluster {

enum class SweepParameter {
    gamma_staggered, ///< gain_loss[m] = (-1)^m * value (1-based m)
    backward_scale,  ///< backward_hops = value * forward_hops
};

SweepParameter sweep_parameter_from_string(std::string_view name);
std::string_view to_string(SweepParameter p);

struct KMeansStage {
    int k = 2;
    std::uint64_t seed = 0;
    KMeansOptions options;
    std::vector<int> references; ///< 0-based; empty means select_references(epsilon)
};

struct SweepStages {
    bool densities = false;
    bool fidelity_set = true;
    bool references = false;
    std::optional<KMeansStage> kmeans;
    bool ep_report = false;
};

struct SweepSpec {
    LatticeSpec base;
    SweepParameter parameter = SweepParameter::gamma_staggered;
    std::vector<double> grid;
    SweepStages stages;
    double epsilon = kDefaultOrthogonalityThreshold;
    EigOptions eig;
    int workers = 1;

    /// Throws InvalidArgument for an empty or non-ascending grid or invalid base.
    void validate() const;
};

struct SweepRecord {
    double parameter = 0.0;
    std::vector<double> fidelity_set; ///< offdiagonal_set, N(N-1)/2 values
    std::optional<Eigen::MatrixXd> densities;
    std::optional<std::vector<int>> references;
    std::optional<ClusterModel> clusters;
    std::vector<int> cluster_references; ///< references used for the k-means features
    std::optional<EpReport> ep;
};

struct SweepResult {
    SweepParameter parameter = SweepParameter::gamma_staggered;
    SweepStages stages;
    std::vector<SweepRecord> records; ///< one per grid value, in grid order
};

/// `count` evenly spaced values start, start + step, ... up to stop (inclusive
/// within 1e-9 * step). Values are start + i * step, never accumulated.
std::vector<double> make_grid(double start, double stop, double step);

/// The LatticeSpec evaluated at one grid value.
LatticeSpec materialize(const SweepSpec& spec, double value);

/// build -> eig -> fidelity -> enabled stages at every grid value. Grid points may
/// run on up to spec.workers threads; records are always in grid order and
/// independent of worker count. Solver failures are rethrown as NumericalError
/// naming the offending grid value.
SweepResult run_sweep(const SweepSpec& spec);

/// Row j holds |psi_j(n)|^2 over sites n for the unit-normalized eigenvector j.
Eigen::MatrixXd density_table(const Spectrum& s);

/// (parameter, min of the off-diagonal fidelity set) per record. Requires the
/// fidelity_set stage.
std::vector<std::pair<double, double>> min_fidelity_curve(const SweepResult& r);

} // namespace epcluster

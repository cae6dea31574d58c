#pragma once

#include "epcluster/clustering.hpp"
#include "epcluster/dynamics.hpp"
#include "epcluster/eigensolver.hpp"
#include "epcluster/ep_analysis.hpp"
#include "epcluster/fidelity.hpp"
#include "epcluster/lattice.hpp"
#include "epcluster/sweep.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace epcluster::io {

using json = nlohmann::json;

inline constexpr std::string_view kVersion = "0.1.0";

/// Shortest "%.15g" rendering; all numeric output goes through this.
std::string format_number(double x);

/// Rounds to 15 significant digits so JSON and CSV agree on every value.
double round15(double x);

/**
 Parses a lattice description. Profiles are either explicit arrays or objects:
   {"kind": "uniform", "value": v}
   {"kind": "sin_squared", "offset": a, "divisor": d}
   {"kind": "staggered", "gamma": g}
 gain_loss may be omitted (all zero). Errors are InvalidArgument and name the
 offending key as a dotted path below `where`.
 */
LatticeSpec lattice_spec_from_json(const json& j, const std::string& where = "lattice");

/// Explicit-array form, suitable for echoing into manifests.
json to_json(const LatticeSpec& spec);
json to_json(const Spectrum& s);
json to_json(const ClusterModel& m);
json to_json(const EpReport& r);

Spectrum spectrum_from_json(const json& j);

/// N x N matrix, header state_1..state_N.
std::string fidelity_csv(const FidelityMatrix& f);
/// n,m,fidelity for n < m (1-based).
std::string offdiagonal_csv(const FidelityMatrix& f);
/// state,ref_1..ref_N'[,cluster]; states and reference labels 1-based.
std::string feature_csv(const FeatureSpace& fs, const std::vector<int>* assignments = nullptr);
/// state,re_E,im_E,site_1..site_N.
std::string density_csv(const Spectrum& s, const Eigen::MatrixXd& densities);
/// t,density_1..density_N,norm[,fidelity_1..fidelity_N].
std::string trace_csv(const std::vector<TraceSample>& rows, bool with_fidelities);

/// An output directory that is created on demand and refuses to replace existing
/// files unless `force` is set.
class OutputDir {
public:
    OutputDir(std::filesystem::path root, bool force);

    /// Throws InvalidArgument if the file exists and force is off.
    void check_writable(const std::string& name) const;
    void write(const std::string& name, std::string_view content) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    bool force_;
};

/// ISO-8601 UTC time; honours SOURCE_DATE_EPOCH for reproducible manifests.
std::string timestamp_utc();

/// Names of the files write_sweep produces for these stages (manifest last).
std::vector<std::string> sweep_output_files(const SweepStages& stages);

/// One CSV per enabled stage plus manifest.json (spec echo, timestamp, version).
void write_sweep(const SweepResult& r, const SweepSpec& spec, const OutputDir& out);

} // namespace epcluster::io

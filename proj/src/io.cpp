#include "epcluster/io.hpp"
#include "epcluster/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

namespace epcluster::io {

namespace {

[[noreturn]] void bad_key(const std::string& path, const std::string& what) {
    throw InvalidArgument("config key '" + path + "': " + what);
}

const json& require(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object()) bad_key(where, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) bad_key(where + "." + key, "missing");
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) bad_key(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) bad_key(path, "expected a finite number");
    return v;
}

std::vector<double> parse_profile(const json& j, int n, const std::string& path) {
    if (j.is_array()) {
        std::vector<double> out;
        out.reserve(j.size());
        for (std::size_t i = 0; i < j.size(); ++i) {
            out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
        }
        if (static_cast<int>(out.size()) != n) {
            bad_key(path, "dimension mismatch: has " + std::to_string(out.size()) + " entries, n_sites is " +
                              std::to_string(n));
        }
        return out;
    }
    if (!j.is_object()) bad_key(path, "expected an array or a profile object");
    const json& kind = require(j, "kind", path);
    if (!kind.is_string()) bad_key(path + ".kind", "expected a string");
    const std::string k = kind.get<std::string>();
    if (k == "uniform") {
        return profile_uniform(n, as_number(require(j, "value", path), path + ".value"));
    }
    if (k == "sin_squared") {
        const double offset = as_number(require(j, "offset", path), path + ".offset");
        const double divisor = as_number(require(j, "divisor", path), path + ".divisor");
        if (divisor == 0.0) bad_key(path + ".divisor", "must be nonzero");
        return profile_sin_squared(n, offset, divisor);
    }
    if (k == "staggered") {
        return profile_staggered(n, as_number(require(j, "gamma", path), path + ".gamma"));
    }
    bad_key(path + ".kind", "unknown profile kind '" + k + "' (expected uniform|sin_squared|staggered)");
}

json complex_pair(const Complex& z) {
    return json::array({round15(z.real()), round15(z.imag())});
}

Complex complex_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw InvalidArgument("expected a [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

json vector_json(const Eigen::Ref<const Eigen::VectorXcd>& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_pair(v(i)));
    return out;
}

void append_row(std::ostringstream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

std::string join_indices(const std::vector<int>& idx, int offset) {
    std::string s;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(idx[i] + offset);
    }
    return s;
}

} // namespace

std::string format_number(double x) {
    if (x == 0.0) return "0"; // also folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return buf;
}

double round15(double x) {
    if (!std::isfinite(x)) return x;
    return std::strtod(format_number(x).c_str(), nullptr);
}

LatticeSpec lattice_spec_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) bad_key(where, "expected an object");
    const json& nj = require(j, "n_sites", where);
    if (!nj.is_number_integer() || nj.get<long long>() < 2 || nj.get<long long>() > 4096) {
        bad_key(where + ".n_sites", "expected an integer in [2, 4096]");
    }
    LatticeSpec spec;
    spec.n_sites = nj.get<int>();
    const json& bj = require(j, "boundary", where);
    if (!bj.is_string()) bad_key(where + ".boundary", "expected \"open\" or \"ring\"");
    try {
        spec.boundary = boundary_from_string(bj.get<std::string>());
    } catch (const InvalidArgument& e) {
        bad_key(where + ".boundary", e.what());
    }
    spec.forward_hops = parse_profile(require(j, "forward_hops", where), spec.n_sites, where + ".forward_hops");
    spec.backward_hops = parse_profile(require(j, "backward_hops", where), spec.n_sites, where + ".backward_hops");
    if (j.contains("gain_loss")) {
        spec.gain_loss = parse_profile(j.at("gain_loss"), spec.n_sites, where + ".gain_loss");
    } else {
        spec.gain_loss = profile_uniform(spec.n_sites, 0.0);
    }
    spec.validate();
    return spec;
}

json to_json(const LatticeSpec& spec) {
    auto arr = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(round15(x));
        return a;
    };
    return json{{"n_sites", spec.n_sites},
                {"boundary", std::string(to_string(spec.boundary))},
                {"forward_hops", arr(spec.forward_hops)},
                {"backward_hops", arr(spec.backward_hops)},
                {"gain_loss", arr(spec.gain_loss)}};
}

json to_json(const Spectrum& s) {
    json vecs = json::array();
    json res = json::array();
    for (Eigen::Index j = 0; j < s.dim(); ++j) {
        vecs.push_back(vector_json(s.state(j)));
        res.push_back(round15(s.residuals(j)));
    }
    return json{{"dim", s.dim()}, {"eigenvalues", vector_json(s.eigenvalues)}, {"eigenvectors", vecs}, {"residuals", res}};
}

Spectrum spectrum_from_json(const json& j) {
    Spectrum s;
    const auto& vals = j.at("eigenvalues");
    const auto& vecs = j.at("eigenvectors");
    const auto& res = j.at("residuals");
    const auto n = static_cast<Eigen::Index>(vals.size());
    if (static_cast<Eigen::Index>(vecs.size()) != n || static_cast<Eigen::Index>(res.size()) != n) {
        throw InvalidArgument("spectrum JSON: eigenvalue, eigenvector and residual counts differ");
    }
    s.eigenvalues.resize(n);
    s.residuals.resize(n);
    const auto rows = n > 0 ? static_cast<Eigen::Index>(vecs[0].size()) : 0;
    s.eigenvectors.resize(rows, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        s.eigenvalues(k) = complex_from(vals[static_cast<std::size_t>(k)]);
        s.residuals(k) = res[static_cast<std::size_t>(k)].get<double>();
        const auto& v = vecs[static_cast<std::size_t>(k)];
        if (static_cast<Eigen::Index>(v.size()) != rows) throw InvalidArgument("spectrum JSON: ragged eigenvectors");
        for (Eigen::Index i = 0; i < rows; ++i) s.eigenvectors(i, k) = complex_from(v[static_cast<std::size_t>(i)]);
    }
    return s;
}

json to_json(const ClusterModel& m) {
    json centroids = json::array();
    for (Eigen::Index c = 0; c < m.centroids.rows(); ++c) {
        json row = json::array();
        for (Eigen::Index d = 0; d < m.centroids.cols(); ++d) row.push_back(round15(m.centroids(c, d)));
        centroids.push_back(row);
    }
    return json{{"k", m.k},
                {"seed", m.seed},
                {"centroids", centroids},
                {"assignments", m.assignments},
                {"inertia", round15(m.inertia)},
                {"iterations_run", m.iterations_run},
                {"restart", m.restart}};
}

json to_json(const EpReport& r) {
    json out{{"nilpotency_index", nullptr},
             {"min_eigenvalue_gap", round15(r.min_eigenvalue_gap)},
             {"max_pair_fidelity", round15(r.max_pair_fidelity)},
             {"base_state", vector_json(r.base_state)}};
    if (r.nilpotency_index) out["nilpotency_index"] = *r.nilpotency_index;
    return out;
}

std::string fidelity_csv(const FidelityMatrix& f) {
    std::ostringstream os;
    const Eigen::Index n = f.dim();
    std::vector<std::string> cells;
    for (Eigen::Index j = 0; j < n; ++j) cells.push_back("state_" + std::to_string(j + 1));
    append_row(os, cells);
    for (Eigen::Index i = 0; i < n; ++i) {
        cells.clear();
        for (Eigen::Index j = 0; j < n; ++j) cells.push_back(format_number(f(i, j)));
        append_row(os, cells);
    }
    return os.str();
}

std::string offdiagonal_csv(const FidelityMatrix& f) {
    std::ostringstream os;
    os << "n,m,fidelity\n";
    for (Eigen::Index i = 0; i < f.dim(); ++i) {
        for (Eigen::Index j = i + 1; j < f.dim(); ++j) {
            os << i + 1 << ',' << j + 1 << ',' << format_number(f(i, j)) << '\n';
        }
    }
    return os.str();
}

std::string feature_csv(const FeatureSpace& fs, const std::vector<int>* assignments) {
    std::ostringstream os;
    std::vector<std::string> cells{"state"};
    for (int r : fs.reference_indices) cells.push_back("ref_" + std::to_string(r + 1));
    if (assignments) cells.emplace_back("cluster");
    append_row(os, cells);
    for (Eigen::Index i = 0; i < fs.states(); ++i) {
        cells.assign(1, std::to_string(i + 1));
        for (Eigen::Index a = 0; a < fs.dimension(); ++a) cells.push_back(format_number(fs.features(i, a)));
        if (assignments) cells.push_back(std::to_string((*assignments)[static_cast<std::size_t>(i)]));
        append_row(os, cells);
    }
    return os.str();
}

std::string density_csv(const Spectrum& s, const Eigen::MatrixXd& densities) {
    std::ostringstream os;
    std::vector<std::string> cells{"state", "re_E", "im_E"};
    for (Eigen::Index n = 0; n < densities.cols(); ++n) cells.push_back("site_" + std::to_string(n + 1));
    append_row(os, cells);
    for (Eigen::Index j = 0; j < densities.rows(); ++j) {
        cells = {std::to_string(j + 1), format_number(s.eigenvalues(j).real()), format_number(s.eigenvalues(j).imag())};
        for (Eigen::Index n = 0; n < densities.cols(); ++n) cells.push_back(format_number(densities(j, n)));
        append_row(os, cells);
    }
    return os.str();
}

std::string trace_csv(const std::vector<TraceSample>& rows, bool with_fidelities) {
    std::ostringstream os;
    const Eigen::Index sites = rows.empty() ? 0 : rows.front().densities.size();
    const Eigen::Index states = rows.empty() ? 0 : rows.front().fidelities.size();
    std::vector<std::string> cells{"t"};
    for (Eigen::Index n = 0; n < sites; ++n) cells.push_back("density_" + std::to_string(n + 1));
    cells.emplace_back("norm");
    if (with_fidelities) {
        for (Eigen::Index j = 0; j < states; ++j) cells.push_back("fidelity_" + std::to_string(j + 1));
    }
    append_row(os, cells);
    for (const auto& r : rows) {
        cells.assign(1, format_number(r.t));
        for (Eigen::Index n = 0; n < r.densities.size(); ++n) cells.push_back(format_number(r.densities(n)));
        cells.push_back(format_number(r.norm));
        if (with_fidelities) {
            for (Eigen::Index j = 0; j < r.fidelities.size(); ++j) cells.push_back(format_number(r.fidelities(j)));
        }
        append_row(os, cells);
    }
    return os.str();
}

OutputDir::OutputDir(std::filesystem::path root, bool force) : root_(std::move(root)), force_(force) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_)) {
        throw InvalidArgument("cannot create output directory '" + root_.string() + "'");
    }
}

void OutputDir::check_writable(const std::string& name) const {
    if (!force_ && std::filesystem::exists(root_ / name)) {
        throw InvalidArgument("refusing to overwrite '" + (root_ / name).string() + "' (use --force)");
    }
}

void OutputDir::write(const std::string& name, std::string_view content) const {
    check_writable(name);
    std::ofstream f(root_ / name, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw InvalidArgument("cannot open '" + (root_ / name).string() + "' for writing");
    }
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string timestamp_utc() {
    std::time_t now = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> sweep_output_files(const SweepStages& st) {
    std::vector<std::string> files;
    if (st.fidelity_set) {
        files.emplace_back("fidelity_set.csv");
        files.emplace_back("min_fidelity.csv");
    }
    if (st.densities) files.emplace_back("densities.csv");
    if (st.references) files.emplace_back("references.csv");
    if (st.kmeans) files.emplace_back("kmeans.csv");
    if (st.ep_report) files.emplace_back("ep.csv");
    files.emplace_back("manifest.json");
    return files;
}

void write_sweep(const SweepResult& r, const SweepSpec& spec, const OutputDir& out) {
    const auto files = sweep_output_files(r.stages);
    for (const auto& f : files) out.check_writable(f);
    const auto& st = r.stages;

    if (st.fidelity_set) {
        std::ostringstream os;
        os << "parameter,n,m,fidelity\n";
        const int n = spec.base.n_sites;
        for (const auto& rec : r.records) {
            std::size_t idx = 0;
            for (int i = 1; i <= n; ++i) {
                for (int j = i + 1; j <= n; ++j) {
                    os << format_number(rec.parameter) << ',' << i << ',' << j << ','
                       << format_number(rec.fidelity_set[idx++]) << '\n';
                }
            }
        }
        out.write("fidelity_set.csv", os.str());
        std::ostringstream mins;
        mins << "parameter,min_fidelity\n";
        for (const auto& [p, m] : min_fidelity_curve(r)) mins << format_number(p) << ',' << format_number(m) << '\n';
        out.write("min_fidelity.csv", mins.str());
    }
    if (st.densities) {
        std::ostringstream os;
        std::vector<std::string> cells{"parameter", "state"};
        for (int n = 1; n <= spec.base.n_sites; ++n) cells.push_back("site_" + std::to_string(n));
        append_row(os, cells);
        for (const auto& rec : r.records) {
            const auto& d = *rec.densities;
            for (Eigen::Index j = 0; j < d.rows(); ++j) {
                cells = {format_number(rec.parameter), std::to_string(j + 1)};
                for (Eigen::Index n = 0; n < d.cols(); ++n) cells.push_back(format_number(d(j, n)));
                append_row(os, cells);
            }
        }
        out.write("densities.csv", os.str());
    }
    if (st.references) {
        std::ostringstream os;
        os << "parameter,count,references\n";
        for (const auto& rec : r.records) {
            os << format_number(rec.parameter) << ',' << rec.references->size() << ','
               << join_indices(*rec.references, 1) << '\n';
        }
        out.write("references.csv", os.str());
    }
    if (st.kmeans) {
        std::ostringstream os;
        os << "parameter,k,inertia,iterations_run,references,assignments\n";
        for (const auto& rec : r.records) {
            const auto& m = *rec.clusters;
            os << format_number(rec.parameter) << ',' << m.k << ',' << format_number(m.inertia) << ','
               << m.iterations_run << ',' << join_indices(rec.cluster_references, 1) << ','
               << join_indices(m.assignments, 0) << '\n';
        }
        out.write("kmeans.csv", os.str());
    }
    if (st.ep_report) {
        std::ostringstream os;
        os << "parameter,nilpotency_index,min_eigenvalue_gap,max_pair_fidelity\n";
        for (const auto& rec : r.records) {
            os << format_number(rec.parameter) << ','
               << (rec.ep->nilpotency_index ? std::to_string(*rec.ep->nilpotency_index) : std::string()) << ','
               << format_number(rec.ep->min_eigenvalue_gap) << ',' << format_number(rec.ep->max_pair_fidelity)
               << '\n';
        }
        out.write("ep.csv", os.str());
    }

    json stages{{"densities", st.densities},
                {"fidelity_set", st.fidelity_set},
                {"references", st.references},
                {"ep_report", st.ep_report},
                {"kmeans", nullptr}};
    if (st.kmeans) {
        std::vector<int> refs1;
        for (int x : st.kmeans->references) refs1.push_back(x + 1);
        stages["kmeans"] = json{{"k", st.kmeans->k}, {"seed", st.kmeans->seed}, {"references", refs1}};
    }
    json grid = json::array();
    for (double g : spec.grid) grid.push_back(round15(g));
    const json manifest{{"tool", "epcluster"},
                        {"version", std::string(kVersion)},
                        {"created", timestamp_utc()},
                        {"command", "sweep"},
                        {"spec",
                         {{"base", to_json(spec.base)},
                          {"parameter", std::string(to_string(spec.parameter))},
                          {"grid", grid},
                          {"epsilon", round15(spec.epsilon)},
                          {"eig_tol", round15(spec.eig.tol)},
                          {"stages", stages}}},
                        {"records", r.records.size()},
                        {"files", files}};
    out.write("manifest.json", manifest.dump(2) + "\n");
}

} // namespace epcluster::io

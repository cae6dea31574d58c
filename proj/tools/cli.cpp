#include "cli.hpp"

#include "epcluster/clustering.hpp"
#include "epcluster/dynamics.hpp"
#include "epcluster/eigensolver.hpp"
#include "epcluster/ep_analysis.hpp"
#include "epcluster/error.hpp"
#include "epcluster/fidelity.hpp"
#include "epcluster/io.hpp"
#include "epcluster/lattice.hpp"
#include "epcluster/parallel.hpp"
#include "epcluster/sweep.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

namespace epcluster::cli {

namespace {

namespace fs = std::filesystem;
using io::json;

struct Flags {
    std::string config;
    std::string out = "epcluster_out";
    bool force = false;
    int k = 0;
    std::uint64_t seed = 0;
    double epsilon = kDefaultOrthogonalityThreshold;
    double tol = 1e-14;
    std::string grid;
    int workers = 0;
    // Set when the flag was given explicitly; flags override config values.
    bool has_k = false, has_seed = false, has_epsilon = false, has_tol = false, has_grid = false, has_workers = false;
};

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
    throw InvalidArgument("config key '" + key + "': " + what);
}

json load_json_file(const fs::path& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot read " + what + " '" + path.string() + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(what + " '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// The parsed --config document plus the lattice it names.
struct RunConfig {
    json doc;
    fs::path dir;
    LatticeSpec lattice;

    bool has(const char* key) const { return doc.contains(key) && !doc.at(key).is_null(); }
};

RunConfig load_config(const Flags& flags) {
    if (flags.config.empty()) {
        throw InvalidArgument("--config is required");
    }
    RunConfig rc;
    rc.doc = load_json_file(flags.config, "config");
    if (!rc.doc.is_object()) bad_key("<root>", "expected a JSON object");
    rc.dir = fs::path(flags.config).parent_path();
    if (!rc.doc.contains("lattice")) bad_key("lattice", "missing");
    const json& lat = rc.doc.at("lattice");
    if (lat.is_string()) {
        fs::path p = lat.get<std::string>();
        if (p.is_relative()) p = rc.dir / p;
        rc.lattice = io::lattice_spec_from_json(load_json_file(p, "lattice file"), "lattice");
    } else {
        rc.lattice = io::lattice_spec_from_json(lat, "lattice");
    }
    return rc;
}

double config_number(const RunConfig& rc, const char* key, double fallback) {
    if (!rc.has(key)) return fallback;
    const json& v = rc.doc.at(key);
    if (!v.is_number()) bad_key(key, "expected a number");
    return v.get<double>();
}

int config_int(const RunConfig& rc, const char* key, int fallback) {
    if (!rc.has(key)) return fallback;
    const json& v = rc.doc.at(key);
    if (!v.is_number_integer()) bad_key(key, "expected an integer");
    return v.get<int>();
}

double resolve_epsilon(const Flags& f, const RunConfig& rc) {
    const double eps = f.has_epsilon ? f.epsilon : config_number(rc, "epsilon", kDefaultOrthogonalityThreshold);
    if (!(eps >= 0.0 && eps < 1.0)) bad_key("epsilon", "must lie in [0, 1)");
    return eps;
}

EigOptions resolve_eig(const Flags& f, const RunConfig& rc) {
    EigOptions o;
    o.tol = f.has_tol ? f.tol : config_number(rc, "tol", o.tol);
    if (!(o.tol > 0.0)) bad_key("tol", "must be positive");
    return o;
}

std::uint64_t resolve_seed(const Flags& f, const RunConfig& rc) {
    if (f.has_seed) return f.seed;
    if (!rc.has("seed")) return 0;
    const json& v = rc.doc.at("seed");
    if (!v.is_number_unsigned()) bad_key("seed", "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

int resolve_k(const Flags& f, const RunConfig& rc, int states) {
    const int k = f.has_k ? f.k : config_int(rc, "k", 0);
    if (k == 0) throw InvalidArgument("k is required (--k or config key 'k')");
    if (k < 1) bad_key("k", "must be positive");
    if (k > states) {
        throw InvalidArgument("k exceeds state count (k = " + std::to_string(k) + ", states = " +
                              std::to_string(states) + ")");
    }
    return k;
}

int resolve_workers(const Flags& f) {
    if (f.has_workers) {
        if (f.workers < 1) throw InvalidArgument("--workers must be positive");
        return f.workers;
    }
    if (const char* env = std::getenv("EPCLUSTER_WORKERS")) {
        char* end = nullptr;
        const long w = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || w < 1) {
            throw InvalidArgument("EPCLUSTER_WORKERS must be a positive integer");
        }
        return static_cast<int>(w);
    }
    return default_workers();
}

/// Explicit references from config (1-based in the file), or nullopt.
std::optional<std::vector<int>> config_references(const RunConfig& rc, int states) {
    if (!rc.has("references")) return std::nullopt;
    const json& v = rc.doc.at("references");
    if (!v.is_array() || v.empty()) bad_key("references", "expected a nonempty array of 1-based state indices");
    std::vector<int> refs;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer()) bad_key("references[" + std::to_string(i) + "]", "expected an integer");
        const int r = v[i].get<int>();
        if (r < 1 || r > states) {
            bad_key("references[" + std::to_string(i) + "]", "index out of range 1.." + std::to_string(states));
        }
        refs.push_back(r - 1);
    }
    return refs;
}

std::vector<double> parse_grid_flag(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidArgument("--grid expects START:STOP:STEP, got '" + text + "'");
        }
    }
    if (parts.size() != 3) throw InvalidArgument("--grid expects START:STOP:STEP, got '" + text + "'");
    return make_grid(parts[0], parts[1], parts[2]);
}

std::vector<double> grid_from_json(const json& g, const std::string& key) {
    if (g.is_array()) {
        std::vector<double> out;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g[i].is_number()) bad_key(key + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(g[i].get<double>());
        }
        return out;
    }
    if (!g.is_object()) bad_key(key, "expected an array or {start, stop, step}");
    for (const char* f : {"start", "stop", "step"}) {
        if (!g.contains(f) || !g.at(f).is_number()) bad_key(key + "." + f, "expected a number");
    }
    return make_grid(g.at("start").get<double>(), g.at("stop").get<double>(), g.at("step").get<double>());
}

void report(std::ostream& out, const io::OutputDir& dir, const std::vector<std::string>& files) {
    for (const auto& f : files) out << "wrote " << (dir.root() / f).string() << '\n';
}

void check_all(const io::OutputDir& dir, const std::vector<std::string>& files) {
    for (const auto& f : files) dir.check_writable(f);
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const Flags& flags, std::ostream& out) {
    const RunConfig rc = load_config(flags);
    const EigOptions eo = resolve_eig(flags, rc);
    const io::OutputDir dir(flags.out, flags.force);
    const std::vector<std::string> files{"spectrum.json", "densities.csv"};
    check_all(dir, files);

    const Hamiltonian h = build_hamiltonian(rc.lattice);
    const Spectrum s = eig(h, eo);
    dir.write("spectrum.json", io::to_json(s).dump(2) + "\n");
    dir.write("densities.csv", io::density_csv(s, density_table(s)));
    report(out, dir, files);
    return ok;
}

int cmd_fidelity(const Flags& flags, std::ostream& out, std::ostream& err) {
    const RunConfig rc = load_config(flags);
    const EigOptions eo = resolve_eig(flags, rc);
    const double eps = resolve_epsilon(flags, rc);
    const io::OutputDir dir(flags.out, flags.force);
    const std::vector<std::string> files{"fidelity.csv", "offdiagonal.csv", "references.csv", "features.csv"};
    check_all(dir, files);

    const Spectrum s = eig(build_hamiltonian(rc.lattice), eo);
    const FidelityMatrix f = fidelity_matrix(s);
    const auto explicit_refs = config_references(rc, rc.lattice.n_sites);
    const std::vector<int> refs = explicit_refs ? *explicit_refs : select_references(f, eps);
    const FeatureSpace fs = feature_vectors(f, refs, eps);
    if (explicit_refs) {
        for (std::size_t a = 0; a < refs.size(); ++a)
            for (std::size_t b = a + 1; b < refs.size(); ++b)
                if (f(refs[a], refs[b]) > eps)
                    err << "warning: references " << refs[a] + 1 << " and " << refs[b] + 1 << " have fidelity "
                        << io::format_number(f(refs[a], refs[b])) << " > epsilon\n";
    }

    std::ostringstream rcsv;
    rcsv << "reference\n";
    for (int r : refs) rcsv << r + 1 << '\n';
    dir.write("fidelity.csv", io::fidelity_csv(f));
    dir.write("offdiagonal.csv", io::offdiagonal_csv(f));
    dir.write("references.csv", rcsv.str());
    dir.write("features.csv", io::feature_csv(fs));
    report(out, dir, files);
    return ok;
}

int cmd_cluster(const Flags& flags, std::ostream& out) {
    const RunConfig rc = load_config(flags);
    const EigOptions eo = resolve_eig(flags, rc);
    const double eps = resolve_epsilon(flags, rc);
    const int k = resolve_k(flags, rc, rc.lattice.n_sites);
    const std::uint64_t seed = resolve_seed(flags, rc);
    const io::OutputDir dir(flags.out, flags.force);
    const std::vector<std::string> files{"cluster.json", "labeled_features.csv"};
    check_all(dir, files);

    const Spectrum s = eig(build_hamiltonian(rc.lattice), eo);
    const FidelityMatrix f = fidelity_matrix(s);
    const auto explicit_refs = config_references(rc, rc.lattice.n_sites);
    const FeatureSpace fs = feature_vectors(f, explicit_refs ? *explicit_refs : select_references(f, eps), eps);
    const ClusterModel model = kmeans(fs, k, seed);

    json j = io::to_json(model);
    std::vector<int> refs1;
    for (int r : fs.reference_indices) refs1.push_back(r + 1);
    j["references"] = refs1;
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int a : model.assignments) ++sizes[static_cast<std::size_t>(a)];
    j["cluster_sizes"] = sizes;
    const bool scorable = k >= 2 && std::none_of(sizes.begin(), sizes.end(), [](int c) { return c == 0; }) &&
                          std::any_of(sizes.begin(), sizes.end(), [](int c) { return c > 1; });
    j["silhouette"] = scorable ? json(io::round15(silhouette_score(fs, model))) : json(nullptr);

    dir.write("cluster.json", j.dump(2) + "\n");
    dir.write("labeled_features.csv", io::feature_csv(fs, &model.assignments));
    report(out, dir, files);
    return ok;
}

SweepStages stages_from_json(const json& sw, const RunConfig& rc, const Flags& flags) {
    SweepStages st;
    if (!sw.contains("stages")) return st;
    const json& js = sw.at("stages");
    if (!js.is_object()) bad_key("sweep.stages", "expected an object");
    auto flag = [&](const char* name, bool fallback) {
        if (!js.contains(name)) return fallback;
        if (!js.at(name).is_boolean()) bad_key(std::string("sweep.stages.") + name, "expected true/false");
        return js.at(name).get<bool>();
    };
    st.densities = flag("densities", false);
    st.fidelity_set = flag("fidelity_set", true);
    st.references = flag("references", false);
    st.ep_report = flag("ep_report", false);
    if (flag("kmeans", false)) {
        KMeansStage km;
        km.k = resolve_k(flags, rc, rc.lattice.n_sites);
        km.seed = resolve_seed(flags, rc);
        if (auto refs = config_references(rc, rc.lattice.n_sites)) km.references = *refs;
        st.kmeans = km;
    }
    return st;
}

int cmd_sweep(const Flags& flags, std::ostream& out) {
    const RunConfig rc = load_config(flags);
    if (!rc.has("sweep")) bad_key("sweep", "missing");
    const json& sw = rc.doc.at("sweep");
    if (!sw.is_object()) bad_key("sweep", "expected an object");

    SweepSpec spec;
    spec.base = rc.lattice;
    const std::string param = sw.value("parameter", std::string("gamma_staggered"));
    try {
        spec.parameter = sweep_parameter_from_string(param);
    } catch (const InvalidArgument& e) {
        bad_key("sweep.parameter", e.what());
    }
    if (flags.has_grid) {
        spec.grid = parse_grid_flag(flags.grid);
    } else {
        if (!sw.contains("grid")) bad_key("sweep.grid", "missing (or pass --grid START:STOP:STEP)");
        spec.grid = grid_from_json(sw.at("grid"), "sweep.grid");
    }
    spec.stages = stages_from_json(sw, rc, flags);
    spec.epsilon = resolve_epsilon(flags, rc);
    spec.eig = resolve_eig(flags, rc);
    spec.workers = resolve_workers(flags);
    spec.validate();

    const io::OutputDir dir(flags.out, flags.force);
    const auto files = io::sweep_output_files(spec.stages);
    check_all(dir, files);
    const SweepResult result = run_sweep(spec);
    io::write_sweep(result, spec, dir);
    report(out, dir, files);
    return ok;
}

int cmd_ep(const Flags& flags, std::ostream& out) {
    const RunConfig rc = load_config(flags);
    const EigOptions eo = resolve_eig(flags, rc);
    const double nil_tol = config_number(rc, "nilpotency_tol", 1e-12);
    if (!(nil_tol > 0.0)) bad_key("nilpotency_tol", "must be positive");
    const io::OutputDir dir(flags.out, flags.force);
    const std::vector<std::string> files{"ep.json"};
    check_all(dir, files);

    const Hamiltonian h = build_hamiltonian(rc.lattice);
    const Spectrum s = eig(h, eo);
    const FidelityMatrix f = fidelity_matrix(s);
    json j = io::to_json(ep_report(h, s, f, nil_tol));
    j["dim"] = h.dim();
    dir.write("ep.json", j.dump(2) + "\n");
    report(out, dir, files);
    return ok;
}

WavePacket initial_packet(const RunConfig& rc, const json& ev, const Spectrum& s) {
    const Eigen::Index n = s.eigenvectors.rows();
    WavePacket psi{Eigen::VectorXcd::Zero(n), 0.0};
    if (!ev.contains("initial")) bad_key("evolve.initial", "missing");
    const json& init = ev.at("initial");
    if (init.is_array()) {
        if (static_cast<Eigen::Index>(init.size()) != n) bad_key("evolve.initial", "length must equal n_sites");
        for (std::size_t i = 0; i < init.size(); ++i) {
            const json& z = init[i];
            if (z.is_number()) {
                psi.amplitudes(static_cast<Eigen::Index>(i)) = z.get<double>();
            } else if (z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number()) {
                psi.amplitudes(static_cast<Eigen::Index>(i)) = Complex(z[0].get<double>(), z[1].get<double>());
            } else {
                bad_key("evolve.initial[" + std::to_string(i) + "]", "expected a number or [re, im]");
            }
        }
    } else if (init.is_object() && init.contains("site")) {
        const json& v = init.at("site");
        if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > n)
            bad_key("evolve.initial.site", "expected an integer in 1.." + std::to_string(n));
        psi.amplitudes(v.get<int>() - 1) = 1.0;
    } else if (init.is_object() && init.contains("eigenstate")) {
        const json& v = init.at("eigenstate");
        if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > n)
            bad_key("evolve.initial.eigenstate", "expected an integer in 1.." + std::to_string(n));
        psi.amplitudes = s.state(v.get<int>() - 1);
    } else if (init.is_string() && init.get<std::string>() == "uniform") {
        psi.amplitudes.setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    } else {
        bad_key("evolve.initial", "expected an amplitude array, {\"site\": n}, {\"eigenstate\": j} or \"uniform\"");
    }
    (void)rc;
    psi.validate();
    return psi;
}

int cmd_evolve(const Flags& flags, std::ostream& out) {
    const RunConfig rc = load_config(flags);
    const EigOptions eo = resolve_eig(flags, rc);
    if (!rc.has("evolve")) bad_key("evolve", "missing");
    const json& ev = rc.doc.at("evolve");
    if (!ev.is_object()) bad_key("evolve", "expected an object");
    std::vector<double> times;
    if (flags.has_grid) {
        times = parse_grid_flag(flags.grid);
    } else {
        if (!ev.contains("times")) bad_key("evolve.times", "missing (or pass --grid START:STOP:STEP)");
        times = grid_from_json(ev.at("times"), "evolve.times");
    }
    bool with_fid = false;
    if (ev.contains("fidelities")) {
        if (!ev.at("fidelities").is_boolean()) bad_key("evolve.fidelities", "expected true/false");
        with_fid = ev.at("fidelities").get<bool>();
    }
    const int workers = resolve_workers(flags);
    const io::OutputDir dir(flags.out, flags.force);
    const std::vector<std::string> files{"trace.csv", "evolve.json"};
    check_all(dir, files);

    const Spectrum s = eig(build_hamiltonian(rc.lattice), eo);
    const WavePacket psi0 = initial_packet(rc, ev, s);
    const Eigen::VectorXcd c = expand(psi0, s);
    const auto trace = time_trace(s, c, times, with_fid, workers);

    json j{{"coefficients", json::array()}, {"classification", nullptr}};
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        j["coefficients"].push_back(json::array({io::round15(c(i).real()), io::round15(c(i).imag())}));
    }
    const bool want_class = flags.has_k || rc.has("k");
    if (want_class) {
        const FidelityMatrix f = fidelity_matrix(s);
        const double eps = resolve_epsilon(flags, rc);
        const auto explicit_refs = config_references(rc, rc.lattice.n_sites);
        const FeatureSpace fs = feature_vectors(f, explicit_refs ? *explicit_refs : select_references(f, eps), eps);
        const ClusterModel model = kmeans(fs, resolve_k(flags, rc, rc.lattice.n_sites), resolve_seed(flags, rc));
        const PacketClass pc = classify_packet(psi0, s, fs, model);
        json feat = json::array();
        for (Eigen::Index a = 0; a < pc.feature.size(); ++a) feat.push_back(io::round15(pc.feature(a)));
        j["classification"] = json{{"cluster", pc.cluster}, {"feature", feat}, {"model", io::to_json(model)}};
    }
    dir.write("trace.csv", io::trace_csv(trace, with_fid));
    dir.write("evolve.json", j.dump(2) + "\n");
    report(out, dir, files);
    return ok;
}

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", f.out, "Output directory (created if absent)");
    sub->add_flag("--force", f.force, "Overwrite existing output files");
    sub->add_option("--k", f.k, "Number of clusters")->each([&f](const std::string&) { f.has_k = true; });
    sub->add_option("--seed", f.seed, "k-means seed")->each([&f](const std::string&) { f.has_seed = true; });
    sub->add_option("--epsilon", f.epsilon, "Reference orthogonality threshold")
        ->each([&f](const std::string&) { f.has_epsilon = true; });
    sub->add_option("--tol", f.tol, "QR deflation tolerance")->each([&f](const std::string&) { f.has_tol = true; });
    sub->add_option("--grid", f.grid, "Parameter or time grid START:STOP:STEP")
        ->each([&f](const std::string&) { f.has_grid = true; });
    sub->add_option("--workers", f.workers, "Worker threads (fallback: EPCLUSTER_WORKERS)")
        ->each([&f](const std::string&) { f.has_workers = true; });
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Eigenstate clustering for 1D non-Hermitian lattices", "epcluster"};
    app.require_subcommand(1);
    Flags flags;

    struct Command {
        const char* name;
        const char* help;
        std::function<int()> run;
    };
    const std::vector<Command> commands{
        {"spectrum", "Eigenvalues, eigenvectors and densities", [&] { return cmd_spectrum(flags, out); }},
        {"fidelity", "Fidelity matrix, references and features", [&] { return cmd_fidelity(flags, out, err); }},
        {"cluster", "k-means over fidelity features", [&] { return cmd_cluster(flags, out); }},
        {"sweep", "Parameter sweep", [&] { return cmd_sweep(flags, out); }},
        {"ep", "Exceptional-point diagnostics", [&] { return cmd_ep(flags, out); }},
        {"evolve", "Wave-packet time evolution", [&] { return cmd_evolve(flags, out); }},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        subs.push_back(app.add_subcommand(c.name, c.help));
        add_common(subs.back(), flags);
    }

    std::vector<std::string> argv_store{"epcluster"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }

    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (subs[i]->parsed()) return commands[i].run();
        }
        return config_error;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    } catch (const io::json::exception& e) {
        err << "error: config: " << e.what() << '\n';
        return config_error;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return numerical_error;
    }
}

} // namespace epcluster::cli

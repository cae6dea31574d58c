#include "epcluster/fidelity.hpp"
#include "epcluster/error.hpp"

#include <string>

namespace epcluster {

namespace {

// Plain loop so <v|w> and <w|v> are evaluated in the same order and differ only by
// an exact conjugation.
Complex inner(const Eigen::Ref<const Eigen::VectorXcd>& v, const Eigen::Ref<const Eigen::VectorXcd>& w,
              double sv, double sw) {
    Complex acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        acc += std::conj(v(i) / sv) * (w(i) / sw);
    }
    return acc;
}

} // namespace

double fidelity(const Eigen::Ref<const Eigen::VectorXcd>& v, const Eigen::Ref<const Eigen::VectorXcd>& w) {
    if (v.size() != w.size()) {
        throw InvalidArgument("fidelity: vector lengths differ (" + std::to_string(v.size()) + " vs " +
                              std::to_string(w.size()) + ")");
    }
    const double nv = v.norm();
    const double nw = w.norm();
    if (nv == 0.0 || nw == 0.0) {
        throw InvalidArgument("fidelity: zero vector");
    }
    // Normalizing first keeps |<v|w>|^2 away from overflow for unnormalized inputs.
    const Complex o = inner(v, w, nv, nw);
    const double vv = inner(v, v, nv, nv).real();
    const double ww = inner(w, w, nw, nw).real();
    return std::norm(o) / (vv * ww);
}

FidelityMatrix fidelity_matrix(const Spectrum& s) {
    const Eigen::Index n = s.dim();
    FidelityMatrix f{Eigen::MatrixXd::Identity(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double value = fidelity(s.state(i), s.state(j));
            f.values(i, j) = value;
            f.values(j, i) = value;
        }
    }
    return f;
}

std::vector<double> offdiagonal_set(const FidelityMatrix& f) {
    const Eigen::Index n = f.dim();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            out.push_back(f(i, j));
        }
    }
    return out;
}

std::vector<int> select_references(const FidelityMatrix& f, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) {
        throw InvalidArgument("select_references: epsilon must lie in [0, 1)");
    }
    std::vector<int> refs;
    const Eigen::Index n = f.dim();
    for (Eigen::Index cand = 0; cand < n; ++cand) {
        bool admit = true;
        for (int r : refs) {
            if (f(cand, r) > epsilon) {
                admit = false;
                break;
            }
        }
        if (admit) {
            refs.push_back(static_cast<int>(cand));
        }
    }
    return refs;
}

FeatureSpace feature_vectors(const FidelityMatrix& f, const std::vector<int>& refs, double epsilon) {
    if (refs.empty()) {
        throw InvalidArgument("feature_vectors: reference set is empty");
    }
    const Eigen::Index n = f.dim();
    for (int r : refs) {
        if (r < 0 || r >= n) {
            throw InvalidArgument("feature_vectors: reference index " + std::to_string(r + 1) +
                                  " out of range 1.." + std::to_string(n));
        }
    }
    FeatureSpace fs;
    fs.reference_indices = refs;
    fs.orthogonality_threshold = epsilon;
    fs.features.resize(n, static_cast<Eigen::Index>(refs.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < refs.size(); ++a) {
            fs.features(i, static_cast<Eigen::Index>(a)) = f(i, refs[a]);
        }
    }
    return fs;
}

} // namespace epcluster

#include "epcluster/clustering.hpp"
#include "epcluster/error.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

namespace epcluster {

namespace {

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int nearest(const Eigen::MatrixXd& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& x, double* dist2) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (dist2 != nullptr) *dist2 = best_d;
    return best;
}

double assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& labels) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double d = 0.0;
        labels[static_cast<std::size_t>(i)] = nearest(centroids, points.row(i), &d);
        total += d;
    }
    return total;
}

// New centroids as cluster means. An empty cluster takes over the point farthest
// from its current centroid.
Eigen::MatrixXd update_centroids(const Eigen::MatrixXd& points, const Eigen::MatrixXd& old,
                                 std::vector<int>& labels) {
    const Eigen::Index k = old.rows();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        sums.row(c) += points.row(i);
        ++counts[static_cast<std::size_t>(c)];
    }
    Eigen::MatrixXd next = old;
    for (Eigen::Index c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
            next.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        }
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) continue;
        Eigen::Index far = -1;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const int owner = labels[static_cast<std::size_t>(i)];
            if (counts[static_cast<std::size_t>(owner)] < 2) continue; // don't empty another cluster
            const double d = (points.row(i) - next.row(owner)).squaredNorm();
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far < 0) continue;
        --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
        labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
        counts[static_cast<std::size_t>(c)] = 1;
        next.row(c) = points.row(far);
    }
    return next;
}

void canonicalize(ClusterModel& m) {
    std::vector<int> relabel(static_cast<std::size_t>(m.k), -1);
    int next = 0;
    for (int a : m.assignments) {
        if (relabel[static_cast<std::size_t>(a)] < 0) relabel[static_cast<std::size_t>(a)] = next++;
    }
    for (auto& r : relabel) {
        if (r < 0) r = next++;
    }
    Eigen::MatrixXd c(m.centroids.rows(), m.centroids.cols());
    for (int old = 0; old < m.k; ++old) {
        c.row(relabel[static_cast<std::size_t>(old)]) = m.centroids.row(old);
    }
    m.centroids = std::move(c);
    for (int& a : m.assignments) a = relabel[static_cast<std::size_t>(a)];
}

void check_points(const Eigen::MatrixXd& points, int k) {
    if (points.rows() == 0 || points.cols() == 0) {
        throw InvalidArgument("kmeans: empty feature set");
    }
    if (k < 1) {
        throw InvalidArgument("kmeans: k must be at least 1");
    }
    if (k > points.rows()) {
        throw InvalidArgument("k exceeds state count (k = " + std::to_string(k) + ", states = " +
                              std::to_string(points.rows()) + ")");
    }
}

} // namespace

double compute_inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                       const std::vector<int>& assignments) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        total += (points.row(i) - centroids.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return total;
}

std::vector<int> kmeans_plus_plus(const Eigen::MatrixXd& points, int k, std::uint64_t stream_seed) {
    check_points(points, k);
    std::mt19937_64 rng(stream_seed);
    const Eigen::Index n = points.rows();
    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(k));
    chosen.push_back(static_cast<int>(std::min<Eigen::Index>(static_cast<Eigen::Index>(unit_draw(rng) * n), n - 1)));

    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = (points.row(i) - points.row(chosen[0])).squaredNorm();

    while (static_cast<int>(chosen.size()) < k) {
        const double total = d2.sum();
        Eigen::Index pick = n - 1;
        if (total > 0.0) {
            const double target = unit_draw(rng) * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (d2(i) > 0.0 && acc > target) {
                    pick = i;
                    break;
                }
            }
            while (d2(pick) == 0.0 && pick > 0) --pick; // rounding at the tail
        } else {
            // All remaining mass is zero (duplicate points): take the first unchosen index.
            pick = 0;
            while (std::find(chosen.begin(), chosen.end(), static_cast<int>(pick)) != chosen.end()) ++pick;
        }
        chosen.push_back(static_cast<int>(pick));
        for (Eigen::Index i = 0; i < n; ++i) {
            d2(i) = std::min(d2(i), (points.row(i) - points.row(pick)).squaredNorm());
        }
    }
    return chosen;
}

ClusterModel lloyd(const Eigen::MatrixXd& points, const Eigen::MatrixXd& initial_centroids,
                   const KMeansOptions& opts) {
    const int k = static_cast<int>(initial_centroids.rows());
    check_points(points, k);
    if (initial_centroids.cols() != points.cols()) {
        throw InvalidArgument("lloyd: centroid dimension does not match feature dimension");
    }
    if (opts.max_iter < 1 || !(opts.tol >= 0.0)) {
        throw InvalidArgument("kmeans: max_iter must be >= 1 and tol >= 0");
    }
    ClusterModel m;
    m.k = k;
    m.centroids = initial_centroids;
    m.assignments.assign(static_cast<std::size_t>(points.rows()), 0);

    for (int it = 0; it < opts.max_iter; ++it) {
        m.inertia_history.push_back(assign(points, m.centroids, m.assignments));
        Eigen::MatrixXd next = update_centroids(points, m.centroids, m.assignments);
        const double shift = (next - m.centroids).rowwise().norm().maxCoeff();
        m.centroids = std::move(next);
        m.iterations_run = it + 1;
        if (shift <= opts.tol) break;
    }
    m.inertia = assign(points, m.centroids, m.assignments);
    m.inertia_history.push_back(m.inertia);
    canonicalize(m);
    return m;
}

ClusterModel kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& opts) {
    check_points(points, k);
    if (opts.restarts < 1) {
        throw InvalidArgument("kmeans: restarts must be >= 1");
    }
    ClusterModel best;
    bool have = false;
    for (int r = 0; r < opts.restarts; ++r) {
        const std::uint64_t stream = seed + static_cast<std::uint64_t>(r) * 0x9E3779B97F4A7C15ULL;
        const std::vector<int> init = kmeans_plus_plus(points, k, stream);
        Eigen::MatrixXd c(k, points.cols());
        for (int j = 0; j < k; ++j) c.row(j) = points.row(init[static_cast<std::size_t>(j)]);
        ClusterModel m = lloyd(points, c, opts);
        if (!have || m.inertia < best.inertia) {
            best = std::move(m);
            best.restart = r;
            have = true;
        }
    }
    best.seed = seed;
    return best;
}

ClusterModel kmeans(const FeatureSpace& features, int k, std::uint64_t seed, const KMeansOptions& opts) {
    return kmeans(features.features, k, seed, opts);
}

int classify(const ClusterModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature) {
    if (feature.size() != model.centroids.cols()) {
        throw InvalidArgument("classify: feature has length " + std::to_string(feature.size()) + ", model expects " +
                              std::to_string(model.centroids.cols()));
    }
    return nearest(model.centroids, feature.transpose(), nullptr);
}

double silhouette_score(const Eigen::MatrixXd& points, const ClusterModel& model) {
    const int k = model.k;
    if (k < 2) {
        throw InvalidArgument("silhouette_score: needs k >= 2");
    }
    const Eigen::Index n = points.rows();
    if (static_cast<Eigen::Index>(model.assignments.size()) != n) {
        throw InvalidArgument("silhouette_score: assignment count does not match point count");
    }
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : model.assignments) ++counts[static_cast<std::size_t>(a)];
    if (std::any_of(counts.begin(), counts.end(), [](int c) { return c == 0; })) {
        throw InvalidArgument("silhouette_score: empty cluster");
    }
    if (std::all_of(counts.begin(), counts.end(), [](int c) { return c == 1; })) {
        throw InvalidArgument("silhouette_score: singleton-only clustering");
    }

    double total = 0.0;
    std::vector<double> mean_dist(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int own = model.assignments[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(own)] == 1) continue;
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            mean_dist[static_cast<std::size_t>(model.assignments[static_cast<std::size_t>(j)])] +=
                (points.row(i) - points.row(j)).norm();
        }
        const double a = mean_dist[static_cast<std::size_t>(own)] / (counts[static_cast<std::size_t>(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own) continue;
            b = std::min(b, mean_dist[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(c)]);
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

double silhouette_score(const FeatureSpace& features, const ClusterModel& model) {
    return silhouette_score(features.features, model);
}

} // namespace epcluster

#pragma once

#include "epcluster/fidelity.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace epcluster {

struct KMeansOptions {
    int max_iter = 300;
    double tol = 1e-9; ///< stop once the largest centroid shift is <= tol
    int restarts = 10; ///< best (lowest inertia) of this many seeded runs
};

/**
 Fitted k-means model. Cluster labels are canonical: clusters are numbered in
 order of their first member among the input points, so label 0 always contains
 point 0.
 */
struct ClusterModel {
    int k = 0;
    Eigen::MatrixXd centroids;   ///< k x N'
    std::vector<int> assignments; ///< one label in [0, k) per point
    double inertia = 0.0;
    std::uint64_t seed = 0;
    int iterations_run = 0;
    int restart = 0;                     ///< index of the winning restart
    std::vector<double> inertia_history; ///< per Lloyd iteration of the winning restart
};

/**
 Lloyd's algorithm with k-means++ initialization.

 Randomness comes only from std::mt19937_64; restart r is seeded with
 seed + r * 0x9E3779B97F4A7C15 and uniform doubles are formed from the top 53 bits
 of each draw, so identical (points, k, seed, options) give a bit-identical model.
 Throws InvalidArgument when points is empty or k is outside [1, N].
 */
ClusterModel kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& opts = {});
ClusterModel kmeans(const FeatureSpace& features, int k, std::uint64_t seed, const KMeansOptions& opts = {});

/// Lloyd iterations from the given initial centroids (k x N'); no restarts.
ClusterModel lloyd(const Eigen::MatrixXd& points, const Eigen::MatrixXd& initial_centroids,
                   const KMeansOptions& opts = {});

/// Indices of the k-means++ seed points for one restart stream.
std::vector<int> kmeans_plus_plus(const Eigen::MatrixXd& points, int k, std::uint64_t stream_seed);

/// Nearest centroid in Euclidean distance; ties go to the lower index.
int classify(const ClusterModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature);

/// Mean silhouette coefficient. Singleton members contribute 0. Requires k >= 2,
/// every cluster nonempty, and at least one cluster with two or more members.
double silhouette_score(const Eigen::MatrixXd& points, const ClusterModel& model);
double silhouette_score(const FeatureSpace& features, const ClusterModel& model);

/// Sum of squared distances of points to their assigned centroids.
double compute_inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                       const std::vector<int>& assignments);

} // namespace epcluster

#pragma once

#include "srg/data_model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace srg {

/// |A + A'| with an exactly symmetric result and a zero diagonal.
Matrix balance_graph(const Matrix& coefficients);

enum class LaplacianKind {
    unnormalized,  // Deg - W
    symmetric,     // I - Deg^-1/2 W Deg^-1/2, isolated vertices keep a unit diagonal
};

Matrix laplacian(const Matrix& affinity, LaplacianKind kind = LaplacianKind::unnormalized);

struct KMeansResult {
    std::vector<int> assignments;  // per point, in [0, n_clusters)
    Matrix centroids;              // n_clusters x dims
    double inertia = 0.0;
    Index iterations = 0;
};

struct KMeansOptions {
    Index restarts = 10;
    Index max_iter = 300;
    double centroid_tol = 1e-9;
    int threads = 0;
};

/// k-means++ seeding followed by Lloyd iterations; best restart by inertia.
///
/// Restart r draws from std::mt19937_64 seeded with `seed + r`. Lloyd stops
/// when no centroid moves more than `centroid_tol` or after `max_iter`
/// iterations. An emptied cluster is re-seeded with the point farthest from
/// its centroid. Restarts run in parallel; ties in inertia go to the lower
/// restart index, so the result does not depend on the thread count.
KMeansResult kmeans(const Matrix& points, Index n_clusters, std::uint64_t seed, const KMeansOptions& options = {});

/// Runs one restart only (restart index `r` of the policy above).
KMeansResult kmeans_single(const Matrix& points, Index n_clusters, std::uint64_t seed, Index r,
                           const KMeansOptions& options = {});

/// Serial reference for `kmeans`.
KMeansResult kmeans_serial(const Matrix& points, Index n_clusters, std::uint64_t seed,
                           const KMeansOptions& options = {});

struct SpectralOptions {
    LaplacianKind laplacian = LaplacianKind::unnormalized;
    KMeansOptions kmeans;
};

struct ClusterResult {
    std::vector<int> assignments;  // per class index; labels contiguous from 0 in order of first appearance
    Index n_clusters = 0;
    std::vector<double> eigengap_trace;  // smallest min(n + 1, K) Laplacian eigenvalues, ascending
    double inertia = 0.0;
};

/// k-means on the rows of the eigenvectors for the `n` smallest Laplacian eigenvalues.
ClusterResult spectral_cluster(const Matrix& affinity, Index n, std::uint64_t seed,
                               const SpectralOptions& options = {});

/// Suggested cluster count: position of the largest gap among the given ascending eigenvalues.
Index eigengap_suggestion(std::span<const double> eigenvalues);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace srg

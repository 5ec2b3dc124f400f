#include "srg/clustering.hpp"

#include "srg/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

namespace srg {

Matrix balance_graph(const Matrix& coefficients) {
    if (coefficients.rows() != coefficients.cols()) {
        throw NonSquare("coefficient matrix is " + std::to_string(coefficients.rows()) + " x " +
                        std::to_string(coefficients.cols()));
    }
    const Index k = coefficients.rows();
    Matrix out = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i) {
        for (Index j = i + 1; j < k; ++j) {
            const double v = std::abs(coefficients(i, j) + coefficients(j, i));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

Matrix laplacian(const Matrix& affinity, LaplacianKind kind) {
    const Index k = affinity.rows();
    Matrix w = affinity;
    w.diagonal().setZero();
    const Vector degree = w.rowwise().sum();
    if (kind == LaplacianKind::unnormalized) {
        Matrix l = -w;
        l.diagonal() = degree;
        return l;
    }
    Vector inv_sqrt(k);
    for (Index i = 0; i < k; ++i) {
        inv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
    }
    Matrix l = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
    l.diagonal().setOnes();
    return l;
}

namespace {

double sq_dist(const Matrix& points, Index i, const Matrix& centroids, Index c) {
    return (points.row(i) - centroids.row(c)).squaredNorm();
}

Index nearest(const Matrix& points, Index i, const Matrix& centroids) {
    Index best = 0;
    double best_d = sq_dist(points, i, centroids, 0);
    for (Index c = 1; c < centroids.rows(); ++c) {
        const double d = sq_dist(points, i, centroids, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

Matrix plus_plus_seeds(const Matrix& points, Index n_clusters, std::mt19937_64& rng) {
    const Index k = points.rows();
    Matrix centroids(n_clusters, points.cols());
    std::uniform_int_distribution<Index> first(0, k - 1);
    centroids.row(0) = points.row(first(rng));

    Vector closest(k);
    for (Index i = 0; i < k; ++i) {
        closest[i] = sq_dist(points, i, centroids, 0);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index c = 1; c < n_clusters; ++c) {
        const double total = closest.sum();
        Index pick = 0;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            pick = k - 1;
            for (Index i = 0; i < k; ++i) {
                acc += closest[i];
                if (acc > target && closest[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        centroids.row(c) = points.row(pick);
        for (Index i = 0; i < k; ++i) {
            closest[i] = std::min(closest[i], sq_dist(points, i, centroids, c));
        }
    }
    return centroids;
}

void check_kmeans_args(const Matrix& points, Index n_clusters, const KMeansOptions& options) {
    if (n_clusters < 1 || n_clusters > points.rows()) {
        throw ValidationError("n_clusters must lie in [1, " + std::to_string(points.rows()) + "]");
    }
    if (options.restarts < 1 || options.max_iter < 1) {
        throw ValidationError("k-means restarts and max_iter must be >= 1");
    }
    if (!points.allFinite()) {
        throw NumericalFailure("k-means points contain NaN or Inf");
    }
}

bool better(const KMeansResult& a, Index ra, const KMeansResult& b, Index rb) {
    return a.inertia < b.inertia || (a.inertia == b.inertia && ra < rb);
}

}  // namespace

KMeansResult kmeans_single(const Matrix& points, Index n_clusters, std::uint64_t seed, Index r,
                           const KMeansOptions& options) {
    check_kmeans_args(points, n_clusters, options);
    const Index k = points.rows();
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));

    KMeansResult res;
    res.centroids = plus_plus_seeds(points, n_clusters, rng);
    std::vector<Index> assign(static_cast<std::size_t>(k), 0);

    for (Index it = 1; it <= options.max_iter; ++it) {
        res.iterations = it;
        for (Index i = 0; i < k; ++i) {
            assign[static_cast<std::size_t>(i)] = nearest(points, i, res.centroids);
        }
        Matrix updated = Matrix::Zero(n_clusters, points.cols());
        std::vector<Index> counts(static_cast<std::size_t>(n_clusters), 0);
        for (Index i = 0; i < k; ++i) {
            updated.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        }
        for (Index c = 0; c < n_clusters; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                updated.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
                continue;
            }
            // empty: take over the point farthest from its current centroid
            Index far = 0;
            double far_d = -1.0;
            for (Index i = 0; i < k; ++i) {
                const Index a = assign[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(a)] <= 1) {
                    continue;
                }
                const double d = sq_dist(points, i, res.centroids, a);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far_d >= 0.0) {
                --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(far)])];
                assign[static_cast<std::size_t>(far)] = c;
                counts[static_cast<std::size_t>(c)] = 1;
            }
            updated.row(c) = points.row(far);
        }
        const double shift = (updated - res.centroids).rowwise().norm().maxCoeff();
        res.centroids = std::move(updated);
        if (shift < options.centroid_tol) {
            break;
        }
    }

    res.assignments.resize(static_cast<std::size_t>(k));
    res.inertia = 0.0;
    for (Index i = 0; i < k; ++i) {
        const Index a = nearest(points, i, res.centroids);
        res.assignments[static_cast<std::size_t>(i)] = static_cast<int>(a);
        res.inertia += sq_dist(points, i, res.centroids, a);
    }
    return res;
}

KMeansResult kmeans(const Matrix& points, Index n_clusters, std::uint64_t seed, const KMeansOptions& options) {
    check_kmeans_args(points, n_clusters, options);
    std::vector<KMeansResult> runs(static_cast<std::size_t>(options.restarts));
    std::vector<std::exception_ptr> errors(runs.size());
    const int t = options.threads > 0 ? options.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(t)
    for (Index r = 0; r < options.restarts; ++r) {
        try {
            runs[static_cast<std::size_t>(r)] = kmeans_single(points, n_clusters, seed, r, options);
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (better(runs[r], static_cast<Index>(r), runs[best], static_cast<Index>(best))) {
            best = r;
        }
    }
    return std::move(runs[best]);
}

KMeansResult kmeans_serial(const Matrix& points, Index n_clusters, std::uint64_t seed, const KMeansOptions& options) {
    check_kmeans_args(points, n_clusters, options);
    KMeansResult best = kmeans_single(points, n_clusters, seed, 0, options);
    Index best_r = 0;
    for (Index r = 1; r < options.restarts; ++r) {
        auto run = kmeans_single(points, n_clusters, seed, r, options);
        if (better(run, r, best, best_r)) {
            best = std::move(run);
            best_r = r;
        }
    }
    return best;
}

ClusterResult spectral_cluster(const Matrix& affinity, Index n, std::uint64_t seed, const SpectralOptions& options) {
    const Index k = affinity.rows();
    if (affinity.cols() != k) {
        throw NonSquare("affinity matrix is not square");
    }
    if (n < 1 || n > k) {
        throw ValidationError("cluster count " + std::to_string(n) + " out of range [1, " + std::to_string(k) + "]");
    }
    if (!affinity.allFinite()) {
        throw ValidationError("affinity contains NaN or Inf");
    }
    const double scale = std::max(1.0, affinity.cwiseAbs().maxCoeff());
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k; ++j) {
            if (i != j && affinity(i, j) < 0.0) {
                throw ValidationError("affinity has a negative off-diagonal entry");
            }
            if (std::abs(affinity(i, j) - affinity(j, i)) > 1e-12 * scale) {
                throw ValidationError("affinity is not symmetric");
            }
        }
    }

    const Matrix l = laplacian(affinity, options.laplacian);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(l);
    if (eig.info() != Eigen::Success) {
        throw EigenFailure("symmetric eigensolver did not converge");
    }

    ClusterResult result;
    result.n_clusters = n;
    const Index trace_len = std::min(n + 1, k);
    for (Index i = 0; i < trace_len; ++i) {
        result.eigengap_trace.push_back(eig.eigenvalues()[i]);
    }

    const Matrix embedding = eig.eigenvectors().leftCols(n);
    const KMeansResult km = kmeans(embedding, n, seed, options.kmeans);
    result.inertia = km.inertia;

    std::map<int, int> relabel;
    result.assignments.reserve(static_cast<std::size_t>(k));
    for (int a : km.assignments) {
        auto [it, inserted] = relabel.try_emplace(a, static_cast<int>(relabel.size()));
        result.assignments.push_back(it->second);
    }
    result.n_clusters = static_cast<Index>(relabel.size());
    return result;
}

Index eigengap_suggestion(std::span<const double> eigenvalues) {
    if (eigenvalues.size() < 2) {
        return static_cast<Index>(eigenvalues.size());
    }
    Index best = 1;
    double gap = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < eigenvalues.size(); ++i) {
        const double g = eigenvalues[i + 1] - eigenvalues[i];
        if (g > gap) {
            gap = g;
            best = static_cast<Index>(i + 1);
        }
    }
    return best;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("labelings have different lengths");
    }
    const auto n = static_cast<double>(a.size());
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> rows;
    std::map<int, double> cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0;
    for (const auto& [key, c] : joint) {
        index += pairs(c);
    }
    double sum_rows = 0.0;
    for (const auto& [key, c] : rows) {
        sum_rows += pairs(c);
    }
    double sum_cols = 0.0;
    for (const auto& [key, c] : cols) {
        sum_cols += pairs(c);
    }
    const double expected = n > 1.0 ? sum_rows * sum_cols / pairs(n) : 0.0;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) {
        // both labelings trivial in the same way
        return joint.size() == rows.size() && joint.size() == cols.size() ? 1.0 : 0.0;
    }
    return (index - expected) / (max_index - expected);
}

}  // namespace srg

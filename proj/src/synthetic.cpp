#include "srg/synthetic.hpp"

#include "srg/errors.hpp"
#include "srg/srg_learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace srg {

namespace {

constexpr int kMaxDraws = 50;
constexpr double kMaxPlantedCondition = 1e6;

std::vector<Index> cluster_sizes(Index structured, Index sparsity, Index cluster_size) {
    const Index size = cluster_size > 0 ? cluster_size : sparsity + 1;
    const Index clusters = std::max<Index>(1, (structured + size - 1) / size);
    std::vector<Index> sizes(static_cast<std::size_t>(clusters), structured / clusters);
    for (Index c = 0; c < structured % clusters; ++c) {
        ++sizes[static_cast<std::size_t>(c)];
    }
    // a singleton cannot be reconstructed: fold it into its neighbour
    if (sizes.size() > 1 && sizes.back() < 2) {
        sizes[sizes.size() - 2] += sizes.back();
        sizes.pop_back();
    }
    return sizes;
}

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}

    double gauss() { return normal_(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    Index index(Index n) { return std::uniform_int_distribution<Index>(0, n - 1)(rng_); }

    Matrix gauss(Index r, Index c) {
        Matrix m(r, c);
        for (Index j = 0; j < c; ++j) {
            for (Index i = 0; i < r; ++i) {
                m(i, j) = gauss();
            }
        }
        return m;
    }

    Vector unit(Index n) {
        Vector v = gauss(n, 1);
        const double norm = v.norm();
        return norm > 0.0 ? Vector(v / norm) : Vector::Unit(n, 0);
    }

    /// g x r, entries uniform on [0.2, 1] with random signs.
    Matrix relation(Index g, Index r) {
        Matrix w(g, r);
        for (Index j = 0; j < r; ++j) {
            for (Index i = 0; i < g; ++i) {
                w(i, j) = uniform(0.2, 1.0) * (uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0);
            }
        }
        return w;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(index(static_cast<Index>(i)))]);
        }
    }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// g points in R^(g-r) with coords * w = 0 and Gram matrix I - P_w, randomly rotated.
Matrix frame(Draw& draw, const Matrix& w) {
    const Index g = w.rows();
    const Index dim = g - w.cols();
    Eigen::HouseholderQR<Matrix> qr(w);
    const Matrix q = Matrix(qr.householderQ()).rightCols(dim);
    Eigen::HouseholderQR<Matrix> rot(draw.gauss(dim, dim));
    return Matrix(rot.householderQ()) * q.transpose();
}

/// Coefficients reconstructing column m of `coords` from the columns in `support`.
Vector reconstruct(const Matrix& coords, Index m, const std::vector<Index>& support) {
    Matrix basis(coords.rows(), static_cast<Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
        basis.col(static_cast<Index>(i)) = coords.col(support[i]);
    }
    return basis.colPivHouseholderQr().solve(coords.col(m));
}

std::vector<Matrix> bases(Draw& draw, Index n, const std::vector<Index>& dims) {
    const Index total = std::accumulate(dims.begin(), dims.end(), Index{0});
    Matrix all;
    if (total <= n) {
        Eigen::HouseholderQR<Matrix> qr(draw.gauss(n, total));
        all = qr.householderQ() * Matrix::Identity(n, total);
    } else {
        all = draw.gauss(n, total) / std::sqrt(static_cast<double>(n));
    }
    std::vector<Matrix> out;
    Index col = 0;
    for (Index d : dims) {
        out.emplace_back(all.middleCols(col, d));
        col += d;
    }
    return out;
}

Matrix samples_around(Draw& draw, const Vector& centre, Index count, double sigma) {
    Matrix rows(count, centre.size());
    for (Index i = 0; i < count; ++i) {
        for (Index j = 0; j < centre.size(); ++j) {
            rows(i, j) = sigma * draw.gauss();
        }
    }
    if (count > 0) {
        const Vector offset = rows.colwise().mean().transpose();
        rows.rowwise() -= offset.transpose();
        rows.rowwise() += centre.transpose();
    }
    return rows;
}

struct Layout {
    std::vector<int> ids;            // internal index -> class id
    std::vector<bool> unseen;        // internal index -> unseen flag
    std::vector<int> cluster;        // internal index -> cluster (-1 nuisance)
    std::vector<Index> canonical;    // internal index -> canonical column
};

}  // namespace

void validate(const SyntheticSpec& spec) {
    if (spec.k_seen < 1 || spec.k_unseen < 0 || spec.nuisance_classes < 0) {
        throw ValidationError("class counts must be k_seen >= 1, k_unseen >= 0, nuisance >= 0");
    }
    const Index structured = spec.k_seen + spec.k_unseen;
    if (structured < 2) {
        throw ValidationError("need at least two structured classes");
    }
    if (spec.sparsity < 1 || spec.sparsity >= structured + spec.nuisance_classes) {
        throw ValidationError("sparsity must lie in [1, K)");
    }
    if (spec.cluster_size != 0 && spec.cluster_size < spec.sparsity + 1) {
        throw ValidationError("cluster_size must be 0 or at least sparsity + 1");
    }
    if (spec.dim_image < 1 || spec.dim_semantic < 1) {
        throw ValidationError("dimensions must be >= 1");
    }
    if (!(spec.noise_sigma >= 0.0) || !(spec.sample_sigma >= 0.0) || !(spec.scale > 0.0)) {
        throw ValidationError("noise_sigma, sample_sigma must be >= 0 and scale > 0");
    }
    if (!(spec.shift >= 0.0 && spec.shift <= 1.0)) {
        throw ValidationError("shift must lie in [0, 1]");
    }
    if (spec.samples_per_class < 1 || spec.test_samples_per_class < 0 || spec.seen_test_samples_per_class < 0) {
        throw ValidationError("sample counts must be non-negative (training >= 1)");
    }
    if (spec.k_unseen > planted_cluster_count(spec)) {
        throw ValidationError("k_unseen (" + std::to_string(spec.k_unseen) + ") exceeds the number of planted clusters (" +
                              std::to_string(planted_cluster_count(spec)) + ")");
    }
}

Index planted_cluster_count(const SyntheticSpec& spec) {
    return static_cast<Index>(cluster_sizes(spec.k_seen + spec.k_unseen, spec.sparsity, spec.cluster_size).size());
}

SyntheticData generate(const SyntheticSpec& spec) {
    validate(spec);
    Draw draw(spec.seed);

    const Index structured = spec.k_seen + spec.k_unseen;
    const Index k = structured + spec.nuisance_classes;
    const Index k_seen_total = spec.k_seen + spec.nuisance_classes;
    const auto sizes = cluster_sizes(structured, spec.sparsity, spec.cluster_size);
    const auto n_clusters = static_cast<Index>(sizes.size());

    // internal order: cluster members contiguous, nuisance classes last
    Layout layout;
    layout.ids.resize(static_cast<std::size_t>(k));
    std::iota(layout.ids.begin(), layout.ids.end(), 0);
    draw.shuffle(layout.ids);
    layout.unseen.assign(static_cast<std::size_t>(k), false);
    layout.cluster.assign(static_cast<std::size_t>(k), -1);
    std::vector<Index> start(static_cast<std::size_t>(n_clusters), 0);
    {
        Index pos = 0;
        for (Index c = 0; c < n_clusters; ++c) {
            start[static_cast<std::size_t>(c)] = pos;
            for (Index m = 0; m < sizes[static_cast<std::size_t>(c)]; ++m) {
                layout.cluster[static_cast<std::size_t>(pos++)] = static_cast<int>(c);
            }
        }
    }
    std::vector<Index> cluster_pick(static_cast<std::size_t>(n_clusters));
    std::iota(cluster_pick.begin(), cluster_pick.end(), Index{0});
    draw.shuffle(cluster_pick);
    for (Index u = 0; u < spec.k_unseen; ++u) {
        const Index c = cluster_pick[static_cast<std::size_t>(u)];
        const Index member = start[static_cast<std::size_t>(c)] + draw.index(sizes[static_cast<std::size_t>(c)]);
        layout.unseen[static_cast<std::size_t>(member)] = true;
    }

    std::vector<int> seen_ids;
    std::vector<int> unseen_ids;
    for (Index i = 0; i < k; ++i) {
        (layout.unseen[static_cast<std::size_t>(i)] ? unseen_ids : seen_ids).push_back(layout.ids[static_cast<std::size_t>(i)]);
    }
    const auto order = canonical_order(seen_ids, unseen_ids);
    layout.canonical.resize(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) {
        const auto it = std::ranges::find(order, layout.ids[static_cast<std::size_t>(i)]);
        layout.canonical[static_cast<std::size_t>(i)] = static_cast<Index>(it - order.begin());
    }
    auto col = [&](Index internal) { return layout.canonical[static_cast<std::size_t>(internal)]; };

    // subspace dimension per cluster; each member is rebuilt from dims[c] others
    std::vector<Index> dims;
    for (Index g : sizes) {
        dims.push_back(std::min(spec.sparsity, g - 1));
    }

    for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
        Matrix e = Matrix::Zero(spec.dim_semantic, k);
        Matrix f = Matrix::Zero(spec.dim_image, k);
        Matrix a_sem = Matrix::Zero(k, k);
        Matrix a_img = Matrix::Zero(k, k);

        const auto basis_e = bases(draw, spec.dim_semantic, dims);
        const auto basis_f = bases(draw, spec.dim_image, dims);

        for (Index c = 0; c < n_clusters; ++c) {
            const Index g = sizes[static_cast<std::size_t>(c)];
            const Index s0 = start[static_cast<std::size_t>(c)];
            const Index r = dims[static_cast<std::size_t>(c)];
            const Matrix w = draw.relation(g, g - r);
            const Matrix w_img = spec.shift > 0.0 ? Matrix((1.0 - spec.shift) * w + spec.shift * draw.relation(g, g - r)) : w;
            const Matrix coords = frame(draw, w);
            const Matrix coords_img = spec.shift > 0.0 ? frame(draw, w_img) : coords;
            for (Index m = 0; m < g; ++m) {
                const Index cm = col(s0 + m);
                e.col(cm) = spec.scale * basis_e[static_cast<std::size_t>(c)] * coords.col(m);
                f.col(cm) = spec.scale * basis_f[static_cast<std::size_t>(c)] * coords_img.col(m);
                std::vector<Index> support;
                for (Index j = 0; j < g; ++j) {
                    if (j != m) {
                        support.push_back(j);
                    }
                }
                draw.shuffle(support);
                support.resize(static_cast<std::size_t>(r));
                std::ranges::sort(support);
                const Vector alpha = reconstruct(coords, m, support);
                const Vector alpha_img = reconstruct(coords_img, m, support);
                for (std::size_t i = 0; i < support.size(); ++i) {
                    a_sem(col(s0 + support[i]), cm) = alpha[static_cast<Index>(i)];
                    a_img(col(s0 + support[i]), cm) = alpha_img[static_cast<Index>(i)];
                }
            }
        }
        for (Index i = structured; i < k; ++i) {
            e.col(col(i)) = spec.scale * draw.unit(spec.dim_semantic);
            f.col(col(i)) = spec.scale * draw.unit(spec.dim_image);
        }
        if (spec.noise_sigma > 0.0) {
            for (Index i = 0; i < k; ++i) {
                e.col(i) += spec.scale * spec.noise_sigma * draw.unit(spec.dim_semantic);
                f.col(i) += spec.scale * spec.noise_sigma * draw.unit(spec.dim_image);
            }
        }

        if (unseen_block_condition(a_sem, k_seen_total) >= kMaxPlantedCondition) {
            continue;
        }

        SyntheticData out;
        out.semantic = make_space("semantic", e, order);
        out.truth.coefficients = a_sem;
        out.truth.image_coefficients = a_img;
        out.truth.image_prototypes = f;
        out.truth.unseen_prototypes = f.rightCols(spec.k_unseen);
        out.truth.cluster_of.assign(static_cast<std::size_t>(k), -1);
        for (Index i = 0; i < k; ++i) {
            out.truth.cluster_of[static_cast<std::size_t>(col(i))] = layout.cluster[static_cast<std::size_t>(i)];
        }

        std::vector<Matrix> train_blocks;
        std::vector<int> train_labels;
        std::vector<Matrix> test_blocks;
        std::vector<int> test_labels;
        for (Index c = 0; c < k; ++c) {
            const int id = order[static_cast<std::size_t>(c)];
            const bool unseen = c >= k_seen_total;
            if (!unseen) {
                train_blocks.push_back(samples_around(draw, f.col(c), spec.samples_per_class, spec.sample_sigma));
                train_labels.insert(train_labels.end(), static_cast<std::size_t>(spec.samples_per_class), id);
            }
            const Index n_test = unseen ? spec.test_samples_per_class : spec.seen_test_samples_per_class;
            if (n_test > 0) {
                test_blocks.push_back(samples_around(draw, f.col(c), n_test, spec.sample_sigma));
                test_labels.insert(test_labels.end(), static_cast<std::size_t>(n_test), id);
            }
        }
        auto stack = [&](const std::vector<Matrix>& blocks, std::size_t rows) {
            Matrix m(static_cast<Index>(rows), spec.dim_image);
            Index r = 0;
            for (const auto& b : blocks) {
                m.middleRows(r, b.rows()) = b;
                r += b.rows();
            }
            return m;
        };
        out.train = make_dataset(stack(train_blocks, train_labels.size()), train_labels, seen_ids, unseen_ids,
                                 DatasetRole::training);
        out.test = make_dataset(stack(test_blocks, test_labels.size()), test_labels, seen_ids, unseen_ids,
                                DatasetRole::test);
        return out;
    }
    throw ConditioningFailure("no planted graph with a well-conditioned unseen block after " +
                              std::to_string(kMaxDraws) + " draws");
}

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("correlation inputs differ in length");
    }
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::ranges::stable_sort(idx, [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
                ++j;
            }
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) {
                r[idx[t]] = avg;
            }
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const auto n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double cov = 0.0;
    double va = 0.0;
    double vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean) * (ra[i] - mean);
        vb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (va == 0.0 || vb == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return cov / std::sqrt(va * vb);
}

ShiftReport space_shift_report(const EmbeddingSpace& space_a, const EmbeddingSpace& space_b) {
    if (space_a.class_ids != space_b.class_ids) {
        throw ClassOrderMismatch("spaces '" + space_a.name + "' and '" + space_b.name + "' differ in class order");
    }
    const Index k = space_a.num_classes();
    ShiftReport report;
    std::vector<double> da;
    std::vector<double> db;
    for (Index i = 0; i < k; ++i) {
        for (Index j = i + 1; j < k; ++j) {
            da.push_back((space_a.prototypes.col(i) - space_a.prototypes.col(j)).norm());
            db.push_back((space_b.prototypes.col(i) - space_b.prototypes.col(j)).norm());
        }
    }
    const double max_a = da.empty() ? 0.0 : *std::ranges::max_element(da);
    const double max_b = db.empty() ? 0.0 : *std::ranges::max_element(db);
    std::size_t p = 0;
    for (Index i = 0; i < k; ++i) {
        for (Index j = i + 1; j < k; ++j, ++p) {
            if (max_a > 0.0) {
                da[p] /= max_a;
            }
            if (max_b > 0.0) {
                db[p] /= max_b;
            }
            report.rows.push_back({space_a.class_ids[static_cast<std::size_t>(i)],
                                   space_a.class_ids[static_cast<std::size_t>(j)], da[p], db[p]});
        }
    }
    report.rank_correlation = spearman_correlation(da, db);
    return report;
}

}  // namespace srg

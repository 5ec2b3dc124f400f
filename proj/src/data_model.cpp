#include "srg/data_model.hpp"

#include "srg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace srg {

bool all_finite(const Eigen::Ref<const Matrix>& m) {
    return m.allFinite();
}

namespace {

void require_unique(const std::vector<int>& ids, const char* what) {
    std::set<int> s(ids.begin(), ids.end());
    if (s.size() != ids.size()) {
        throw ValidationError(std::string("duplicate class id in ") + what);
    }
}

}  // namespace

void validate(const Dataset& dataset, DatasetRole role) {
    if (static_cast<Index>(dataset.labels.size()) != dataset.features.rows()) {
        throw DimensionMismatch("label count " + std::to_string(dataset.labels.size()) + " != feature rows " +
                                std::to_string(dataset.features.rows()));
    }
    if (!all_finite(dataset.features)) {
        throw ValidationError("features contain NaN or Inf");
    }
    require_unique(dataset.seen_classes, "seen classes");
    require_unique(dataset.unseen_classes, "unseen classes");

    std::set<int> seen(dataset.seen_classes.begin(), dataset.seen_classes.end());
    std::set<int> unseen(dataset.unseen_classes.begin(), dataset.unseen_classes.end());
    for (int u : unseen) {
        if (seen.contains(u)) {
            throw ValidationError("class " + std::to_string(u) + " is both seen and unseen");
        }
    }

    std::map<int, Index> counts;
    for (int label : dataset.labels) {
        if (!seen.contains(label) && !unseen.contains(label)) {
            throw ValidationError("label " + std::to_string(label) + " is in neither the seen nor the unseen set");
        }
        ++counts[label];
    }
    if (role == DatasetRole::training) {
        for (int s : dataset.seen_classes) {
            if (!counts.contains(s)) {
                throw EmptyClass(s);
            }
        }
        for (int u : dataset.unseen_classes) {
            if (counts.contains(u)) {
                throw ValidationError("unseen class " + std::to_string(u) + " has training samples");
            }
        }
    }
}

Dataset make_dataset(Matrix features, std::vector<int> labels, std::vector<int> seen, std::vector<int> unseen,
                     DatasetRole role) {
    std::ranges::sort(seen);
    std::ranges::sort(unseen);
    Dataset ds{std::move(features), std::move(labels), std::move(seen), std::move(unseen)};
    validate(ds, role);
    return ds;
}

std::vector<int> canonical_order(std::vector<int> seen, std::vector<int> unseen) {
    std::ranges::sort(seen);
    std::ranges::sort(unseen);
    seen.insert(seen.end(), unseen.begin(), unseen.end());
    return seen;
}

std::vector<int> canonical_order(const Dataset& dataset) {
    return canonical_order(dataset.seen_classes, dataset.unseen_classes);
}

std::optional<Index> EmbeddingSpace::column_of(int class_id) const {
    auto it = std::ranges::find(class_ids, class_id);
    if (it == class_ids.end()) {
        return std::nullopt;
    }
    return static_cast<Index>(it - class_ids.begin());
}

EmbeddingSpace make_space(std::string name, Matrix prototypes, std::vector<int> class_ids) {
    if (static_cast<Index>(class_ids.size()) != prototypes.cols()) {
        throw DimensionMismatch("space '" + name + "' has " + std::to_string(prototypes.cols()) + " columns but " +
                                std::to_string(class_ids.size()) + " class ids");
    }
    if (!all_finite(prototypes)) {
        throw ValidationError("space '" + name + "' contains NaN or Inf");
    }
    require_unique(class_ids, "embedding manifest");
    return {std::move(name), std::move(prototypes), std::move(class_ids)};
}

EmbeddingSpace restrict_to(const EmbeddingSpace& space, std::span<const int> class_ids) {
    Matrix cols(space.dim(), static_cast<Index>(class_ids.size()));
    for (std::size_t j = 0; j < class_ids.size(); ++j) {
        auto c = space.column_of(class_ids[j]);
        if (!c) {
            throw MissingPrototype(class_ids[j]);
        }
        cols.col(static_cast<Index>(j)) = space.prototypes.col(*c);
    }
    return {space.name, std::move(cols), std::vector<int>(class_ids.begin(), class_ids.end())};
}

Matrix PrototypePartition::full() const {
    Matrix f(seen.rows(), seen.cols() + unseen.cols());
    f << seen, unseen;
    return f;
}

PrototypePartition compute_prototypes(const Dataset& dataset) {
    if (static_cast<Index>(dataset.labels.size()) != dataset.features.rows()) {
        throw DimensionMismatch("label count does not match feature rows");
    }
    const Index d = dataset.dim();
    const auto k_seen = static_cast<Index>(dataset.seen_classes.size());

    std::map<int, Index> column;
    for (Index k = 0; k < k_seen; ++k) {
        column[dataset.seen_classes[static_cast<std::size_t>(k)]] = k;
    }

    PrototypePartition out{Matrix::Zero(d, k_seen), Matrix(d, 0)};
    std::vector<Index> counts(static_cast<std::size_t>(k_seen), 0);
    for (Index i = 0; i < dataset.num_samples(); ++i) {
        auto it = column.find(dataset.labels[static_cast<std::size_t>(i)]);
        if (it == column.end()) {
            continue;
        }
        out.seen.col(it->second) += dataset.features.row(i).transpose();
        ++counts[static_cast<std::size_t>(it->second)];
    }
    for (Index k = 0; k < k_seen; ++k) {
        const Index n = counts[static_cast<std::size_t>(k)];
        if (n == 0) {
            throw EmptyClass(dataset.seen_classes[static_cast<std::size_t>(k)]);
        }
        out.seen.col(k) /= static_cast<double>(n);
    }
    return out;
}

EmbeddingSpace fuse_embeddings(std::span<const EmbeddingSpace> spaces, std::string name) {
    if (spaces.empty()) {
        throw ValidationError("fuse_embeddings needs at least one space");
    }
    const auto& order = spaces.front().class_ids;
    Index total = 0;
    for (const auto& s : spaces) {
        if (s.class_ids != order) {
            throw ClassOrderMismatch("space '" + s.name + "' does not share the class order of '" +
                                     spaces.front().name + "'");
        }
        total += s.dim();
    }

    Matrix fused(total, static_cast<Index>(order.size()));
    Index row = 0;
    for (const auto& s : spaces) {
        for (Index k = 0; k < s.num_classes(); ++k) {
            const double norm = s.prototypes.col(k).norm();
            if (norm == 0.0) {
                throw ZeroColumn(order[static_cast<std::size_t>(k)], s.name);
            }
            fused.block(row, k, s.dim(), 1) = s.prototypes.col(k) / norm;
        }
        row += s.dim();
    }
    return make_space(std::move(name), std::move(fused), order);
}

Dataset subsample_per_class(const Dataset& dataset, const SubsampleRule& rule, std::uint64_t seed) {
    if (rule.fraction.has_value() == rule.count.has_value()) {
        throw ValidationError("subsample rule needs exactly one of fraction or count");
    }
    if (rule.fraction && !(*rule.fraction > 0.0 && *rule.fraction <= 1.0)) {
        throw ValidationError("subsample fraction must lie in (0, 1]");
    }
    if (rule.count && *rule.count < 1) {
        throw ValidationError("subsample count must be >= 1");
    }

    std::map<int, std::vector<Index>> rows_by_class;
    for (Index i = 0; i < dataset.num_samples(); ++i) {
        rows_by_class[dataset.labels[static_cast<std::size_t>(i)]].push_back(i);
    }

    std::mt19937_64 rng(seed);
    std::vector<char> keep(static_cast<std::size_t>(dataset.num_samples()), 1);
    for (int c : dataset.seen_classes) {
        auto it = rows_by_class.find(c);
        if (it == rows_by_class.end()) {
            continue;
        }
        auto& rows = it->second;
        const auto n = static_cast<Index>(rows.size());
        Index target = rule.fraction ? static_cast<Index>(std::ceil(*rule.fraction * static_cast<double>(n) - 1e-9))
                                     : std::min(*rule.count, n);
        target = std::clamp<Index>(target, 1, n);
        // partial Fisher-Yates: the first `target` slots become the sample
        for (Index i = 0; i < target; ++i) {
            std::uniform_int_distribution<Index> pick(i, n - 1);
            std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pick(rng))]);
        }
        for (Index i = target; i < n; ++i) {
            keep[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] = 0;
        }
    }

    const auto kept = static_cast<Index>(std::count(keep.begin(), keep.end(), 1));
    Dataset out{Matrix(kept, dataset.dim()), {}, dataset.seen_classes, dataset.unseen_classes};
    out.labels.reserve(static_cast<std::size_t>(kept));
    Index r = 0;
    for (Index i = 0; i < dataset.num_samples(); ++i) {
        if (keep[static_cast<std::size_t>(i)]) {
            out.features.row(r++) = dataset.features.row(i);
            out.labels.push_back(dataset.labels[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

}  // namespace srg

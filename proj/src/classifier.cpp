#include "srg/classifier.hpp"

#include "srg/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <utility>

namespace srg {

std::string_view to_string(Protocol p) {
    return p == Protocol::zsl ? "zsl" : "gzsl";
}

Protocol parse_protocol(std::string_view text) {
    if (text == "zsl") {
        return Protocol::zsl;
    }
    if (text == "gzsl") {
        return Protocol::gzsl;
    }
    throw ValidationError("unknown protocol '" + std::string(text) + "'");
}

namespace {

void check_instance(Index dim, const EmbeddingSpace& space) {
    if (space.num_classes() == 0) {
        throw EmptyCandidateSet();
    }
    if (dim != space.dim()) {
        throw DimensionMismatch("instance has " + std::to_string(dim) + " dims, prototypes have " +
                                std::to_string(space.dim()));
    }
}

std::vector<int> ranked_row(const Eigen::Ref<const Vector>& x, const EmbeddingSpace& space, Index depth) {
    const Index k = space.num_classes();
    std::vector<std::pair<double, int>> scored(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) {
        scored[static_cast<std::size_t>(j)] = {(x - space.prototypes.col(j)).squaredNorm(),
                                               space.class_ids[static_cast<std::size_t>(j)]};
    }
    const auto keep = static_cast<std::size_t>(std::min(depth, k));
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end());
    std::vector<int> ids(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        ids[i] = scored[i].second;
    }
    return ids;
}

}  // namespace

int classify(const Eigen::Ref<const Vector>& instance, const EmbeddingSpace& candidates) {
    check_instance(instance.size(), candidates);
    int best_id = candidates.class_ids.front();
    double best = (instance - candidates.prototypes.col(0)).squaredNorm();
    for (Index j = 1; j < candidates.num_classes(); ++j) {
        const double dist = (instance - candidates.prototypes.col(j)).squaredNorm();
        const int id = candidates.class_ids[static_cast<std::size_t>(j)];
        if (dist < best || (dist == best && id < best_id)) {
            best = dist;
            best_id = id;
        }
    }
    return best_id;
}

int classify(const Eigen::Ref<const Vector>& instance, const EmbeddingSpace& prototypes,
             std::span<const int> candidate_ids) {
    if (candidate_ids.empty()) {
        throw EmptyCandidateSet();
    }
    return classify(instance, restrict_to(prototypes, candidate_ids));
}

int classify_gzsl(const Eigen::Ref<const Vector>& instance, const EmbeddingSpace& all_prototypes) {
    return classify(instance, all_prototypes);
}

std::vector<std::vector<int>> rank_nearest(const Matrix& instances, const EmbeddingSpace& candidates, Index depth,
                                           int threads) {
    check_instance(instances.cols(), candidates);
    const Index n = instances.rows();
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
    const int t = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(t)
    for (Index i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = ranked_row(instances.row(i).transpose(), candidates, depth);
    }
    return out;
}

std::vector<std::vector<int>> rank_nearest_serial(const Matrix& instances, const EmbeddingSpace& candidates,
                                                  Index depth) {
    check_instance(instances.cols(), candidates);
    std::vector<std::vector<int>> out;
    out.reserve(static_cast<std::size_t>(instances.rows()));
    for (Index i = 0; i < instances.rows(); ++i) {
        out.push_back(ranked_row(instances.row(i).transpose(), candidates, depth));
    }
    return out;
}

namespace {

struct Subset {
    Matrix rows;
    std::vector<int> labels;
};

Subset select_rows(const Dataset& test, const std::set<int>& classes) {
    std::vector<Index> idx;
    for (Index i = 0; i < test.num_samples(); ++i) {
        if (classes.contains(test.labels[static_cast<std::size_t>(i)])) {
            idx.push_back(i);
        }
    }
    Subset s{Matrix(static_cast<Index>(idx.size()), test.dim()), {}};
    for (std::size_t r = 0; r < idx.size(); ++r) {
        s.rows.row(static_cast<Index>(r)) = test.features.row(idx[r]);
        s.labels.push_back(test.labels[static_cast<std::size_t>(idx[r])]);
    }
    return s;
}

/// Hit rate where a hit means the label is among the first `k` ranked ids.
double accuracy(const std::vector<std::vector<int>>& ranked, const std::vector<int>& labels, Index k,
                bool per_class_mean) {
    std::map<int, std::pair<Index, Index>> per_class;  // hits, total
    Index hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& r = ranked[i];
        const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), r.size());
        const bool hit = std::find(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(depth), labels[i]) !=
                         r.begin() + static_cast<std::ptrdiff_t>(depth);
        hits += hit ? 1 : 0;
        auto& pc = per_class[labels[i]];
        pc.first += hit ? 1 : 0;
        ++pc.second;
    }
    if (!per_class_mean) {
        return static_cast<double>(hits) / static_cast<double>(labels.size());
    }
    double sum = 0.0;
    for (const auto& [cls, ht] : per_class) {
        sum += static_cast<double>(ht.first) / static_cast<double>(ht.second);
    }
    return sum / static_cast<double>(per_class.size());
}

void add_per_class(std::map<int, double>& out, const std::vector<std::vector<int>>& ranked,
                   const std::vector<int>& labels) {
    std::map<int, std::pair<Index, Index>> counts;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& c = counts[labels[i]];
        c.first += (!ranked[i].empty() && ranked[i].front() == labels[i]) ? 1 : 0;
        ++c.second;
    }
    for (const auto& [cls, c] : counts) {
        out[cls] = static_cast<double>(c.first) / static_cast<double>(c.second);
    }
}

}  // namespace

EvalReport evaluate(const Dataset& test, const EmbeddingSpace& prototypes, Protocol protocol,
                    std::span<const int> ks, const EvalOptions& options) {
    validate(test, DatasetRole::test);
    for (int k : ks) {
        if (k < 1) {
            throw ValidationError("top-k values must be >= 1");
        }
    }
    const Index max_k = ks.empty() ? 1 : std::max<Index>(1, *std::ranges::max_element(ks));

    const std::set<int> seen(test.seen_classes.begin(), test.seen_classes.end());
    const std::set<int> unseen(test.unseen_classes.begin(), test.unseen_classes.end());
    const auto all_ids = canonical_order(test);

    EvalReport report;
    report.protocol = protocol;
    report.per_class_mean = options.per_class_mean;

    const Subset u = select_rows(test, unseen);
    const Subset s = select_rows(test, seen);
    report.num_unseen_samples = u.rows.rows();

    if (protocol == Protocol::zsl) {
        const EmbeddingSpace unseen_space = restrict_to(prototypes, test.unseen_classes);
        if (u.labels.empty()) {
            return report;
        }
        const auto ranked = rank_nearest(u.rows, unseen_space, max_k, options.threads);
        report.u_to_u = accuracy(ranked, u.labels, 1, options.per_class_mean);
        for (int k : ks) {
            report.top_k[k] = accuracy(ranked, u.labels, k, options.per_class_mean);
        }
        add_per_class(report.per_class_accuracy, ranked, u.labels);
        return report;
    }

    report.num_seen_samples = s.rows.rows();
    const EmbeddingSpace all_space = restrict_to(prototypes, all_ids);
    const EmbeddingSpace unseen_space = restrict_to(prototypes, test.unseen_classes);
    const EmbeddingSpace seen_space = restrict_to(prototypes, test.seen_classes);

    if (!u.labels.empty()) {
        report.u_to_u = accuracy(rank_nearest(u.rows, unseen_space, 1, options.threads), u.labels, 1,
                                 options.per_class_mean);
        const auto ranked = rank_nearest(u.rows, all_space, 1, options.threads);
        report.u_to_tau = accuracy(ranked, u.labels, 1, options.per_class_mean);
        add_per_class(report.per_class_accuracy, ranked, u.labels);
    }
    if (!s.labels.empty()) {
        report.s_to_s = accuracy(rank_nearest(s.rows, seen_space, 1, options.threads), s.labels, 1,
                                 options.per_class_mean);
        const auto ranked = rank_nearest(s.rows, all_space, 1, options.threads);
        report.s_to_tau = accuracy(ranked, s.labels, 1, options.per_class_mean);
        add_per_class(report.per_class_accuracy, ranked, s.labels);
    }
    if (test.num_samples() > 0) {
        const auto ranked = rank_nearest(test.features, all_space, max_k, options.threads);
        for (int k : ks) {
            report.top_k[k] = accuracy(ranked, test.labels, k, options.per_class_mean);
        }
    }
    return report;
}

}  // namespace srg

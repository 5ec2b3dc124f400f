#include "srg/cv_tuner.hpp"

#include "srg/classifier.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace srg {

GridSpec GridSpec::defaults() {
    GridSpec g;
    for (int i = -4; i <= 4; ++i) {
        g.lambda_grid.push_back(std::pow(10.0, 0.5 * i));
    }
    for (int i = -4; i <= -1; ++i) {
        g.gamma_grid.push_back(std::pow(10.0, 0.5 * i));
    }
    return g;
}

void validate(const GridSpec& grid) {
    if (grid.lambda_grid.empty() || grid.gamma_grid.empty()) {
        throw ValidationError("grids must be non-empty");
    }
    for (double l : grid.lambda_grid) {
        if (!(l > 0.0) || !std::isfinite(l)) {
            throw ValidationError("lambda grid values must be positive");
        }
    }
    for (double g : grid.gamma_grid) {
        if (!(g > 0.0 && g < 1.0)) {
            throw ValidationError("gamma grid values must lie in (0, 1)");
        }
    }
    if (grid.n_folds < 2) {
        throw ValidationError("n_folds must be >= 2");
    }
}

std::vector<std::vector<int>> make_folds(const std::vector<int>& seen_classes, Index n_folds, std::uint64_t seed) {
    const auto k = static_cast<Index>(seen_classes.size());
    if (n_folds < 1 || n_folds > k) {
        throw TooFewClasses("cannot split " + std::to_string(k) + " seen classes into " + std::to_string(n_folds) +
                            " folds");
    }
    std::vector<int> shuffled = seen_classes;
    std::ranges::sort(shuffled);
    std::mt19937_64 rng(seed);
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(shuffled[i - 1], shuffled[pick(rng)]);
    }
    std::vector<std::vector<int>> folds(static_cast<std::size_t>(n_folds));
    std::size_t pos = 0;
    for (Index f = 0; f < n_folds; ++f) {
        const Index size = k / n_folds + (f < k % n_folds ? 1 : 0);
        auto& fold = folds[static_cast<std::size_t>(f)];
        fold.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(pos),
                    shuffled.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(size)));
        std::ranges::sort(fold);
        pos += static_cast<std::size_t>(size);
    }
    return folds;
}

namespace {

Dataset rows_of(const Dataset& ds, const std::set<int>& keep, std::vector<int> seen, std::vector<int> unseen,
                DatasetRole role) {
    std::vector<Index> idx;
    for (Index i = 0; i < ds.num_samples(); ++i) {
        if (keep.contains(ds.labels[static_cast<std::size_t>(i)])) {
            idx.push_back(i);
        }
    }
    Matrix features(static_cast<Index>(idx.size()), ds.dim());
    std::vector<int> labels;
    labels.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        features.row(static_cast<Index>(r)) = ds.features.row(idx[r]);
        labels.push_back(ds.labels[static_cast<std::size_t>(idx[r])]);
    }
    return make_dataset(std::move(features), std::move(labels), std::move(seen), std::move(unseen), role);
}

}  // namespace

double score_fold(const Dataset& train, const EmbeddingSpace& semantic, const std::vector<int>& held_out,
                  const Hyperparams& hp) {
    const std::set<int> held(held_out.begin(), held_out.end());
    std::vector<int> pseudo_seen;
    for (int c : train.seen_classes) {
        if (!held.contains(c)) {
            pseudo_seen.push_back(c);
        }
    }
    if (pseudo_seen.empty() || held.empty()) {
        throw TooFewClasses("a fold must leave both seen and held-out classes");
    }
    const std::set<int> seen_set(pseudo_seen.begin(), pseudo_seen.end());

    const Dataset fit_set = rows_of(train, seen_set, pseudo_seen, held_out, DatasetRole::training);
    const Dataset eval_set = rows_of(train, held, pseudo_seen, held_out, DatasetRole::test);

    const auto order = canonical_order(pseudo_seen, held_out);
    const EmbeddingSpace fold_semantic = restrict_to(semantic, order);
    const PrototypePartition protos = compute_prototypes(fit_set);

    FitOptions fo;
    fo.threads = 1;
    const SrgModel model = fit(fold_semantic, protos.seen, hp, fo);
    const std::vector<int> ks{1};
    EvalOptions eo;
    eo.threads = 1;
    const EvalReport report = evaluate(eval_set, model.image_space(), Protocol::zsl, ks, eo);
    return report.u_to_u.value_or(0.0);
}

TuneResult grid_search(const Dataset& train, const EmbeddingSpace& semantic, const GridSpec& grid,
                       const Hyperparams& base, const TuneOptions& options) {
    validate(grid);
    validate(train, DatasetRole::training);

    TuneResult result;
    result.folds = make_folds(train.seen_classes, grid.n_folds, grid.seed);

    const auto n_lambda = grid.lambda_grid.size();
    const auto n_gamma = grid.gamma_grid.size();
    const auto n_folds = result.folds.size();
    const std::size_t jobs = n_lambda * n_gamma * n_folds;

    std::vector<double> scores(jobs, 0.0);
    std::vector<std::exception_ptr> errors(jobs);
    const int t = options.threads > 0 ? options.threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(t)
    for (std::size_t job = 0; job < jobs; ++job) {
        const std::size_t f = job % n_folds;
        const std::size_t g = (job / n_folds) % n_gamma;
        const std::size_t l = job / (n_folds * n_gamma);
        Hyperparams hp = base;
        hp.lambda = grid.lambda_grid[l];
        hp.gamma = grid.gamma_grid[g];
        try {
            scores[job] = score_fold(train, semantic, result.folds[f], hp);
        } catch (const std::exception& e) {
            try {
                throw GridPointError(hp.lambda, hp.gamma, static_cast<Index>(f), e.what());
            } catch (...) {
                errors[job] = std::current_exception();
            }
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    bool have_best = false;
    for (std::size_t l = 0; l < n_lambda; ++l) {
        for (std::size_t g = 0; g < n_gamma; ++g) {
            GridPoint point{grid.lambda_grid[l], grid.gamma_grid[g], {}, 0.0};
            for (std::size_t f = 0; f < n_folds; ++f) {
                point.fold_accuracy.push_back(scores[(l * n_gamma + g) * n_folds + f]);
            }
            point.mean_accuracy = std::accumulate(point.fold_accuracy.begin(), point.fold_accuracy.end(), 0.0) /
                                  static_cast<double>(n_folds);
            const bool wins = !have_best || point.mean_accuracy > result.best_score ||
                              (point.mean_accuracy == result.best_score &&
                               (point.lambda > result.best_lambda ||
                                (point.lambda == result.best_lambda && point.gamma < result.best_gamma)));
            if (wins) {
                have_best = true;
                result.best_lambda = point.lambda;
                result.best_gamma = point.gamma;
                result.best_score = point.mean_accuracy;
            }
            result.table.push_back(std::move(point));
        }
    }
    return result;
}

}  // namespace srg

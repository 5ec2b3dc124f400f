#pragma once

#include "srg/data_model.hpp"
#include "srg/srg_learner.hpp"

#include <cstdint>
#include <vector>

namespace srg {

struct GridSpec {
    std::vector<double> lambda_grid;
    std::vector<double> gamma_grid;
    Index n_folds = 5;
    std::uint64_t seed = 0;

    /// Half-decade steps: lambda in 10^[-2, 2], gamma in 10^[-2, 0).
    static GridSpec defaults();
};

void validate(const GridSpec& grid);

/// Seeded partition of `seen_classes` into `n_folds` folds; the first
/// K_s mod n_folds folds get one extra class. Each fold is sorted.
std::vector<std::vector<int>> make_folds(const std::vector<int>& seen_classes, Index n_folds, std::uint64_t seed);

struct GridPoint {
    double lambda = 0.0;
    double gamma = 0.0;
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
};

struct TuneResult {
    double best_lambda = 0.0;
    double best_gamma = 0.0;
    double best_score = 0.0;
    std::vector<GridPoint> table;  // lambda-major, grid order
    std::vector<std::vector<int>> folds;
};

/// Raised when a fit inside the search fails; carries the grid point and fold.
class GridPointError : public Error {
public:
    GridPointError(double lambda, double gamma, Index fold, const std::string& what)
        : Error("lambda=" + std::to_string(lambda) + " gamma=" + std::to_string(gamma) + " fold=" +
                std::to_string(fold) + ": " + what),
          lambda(lambda),
          gamma(gamma),
          fold(fold) {}
    double lambda;
    double gamma;
    Index fold;
};

struct TuneOptions {
    int threads = 0;
};

/// Class-wise cross-validation over the seen classes.
///
/// For every grid point and fold, the fold's classes play the unseen role:
/// their samples are removed from training, the model is fit on the
/// remaining seen classes plus the fold's semantic embeddings, and the fold's
/// samples are classified among the synthesized prototypes (per-sample
/// accuracy). Best mean accuracy wins; ties prefer larger lambda, then
/// smaller gamma. Grid points run in parallel; results do not depend on the
/// thread count.
TuneResult grid_search(const Dataset& train, const EmbeddingSpace& semantic, const GridSpec& grid,
                       const Hyperparams& base, const TuneOptions& options = {});

/// Accuracy of a single (lambda, gamma, fold) job; exposed for tests.
double score_fold(const Dataset& train, const EmbeddingSpace& semantic, const std::vector<int>& held_out,
                  const Hyperparams& hp);

}  // namespace srg

#pragma once

#include "srg/data_model.hpp"
#include "srg/lasso.hpp"

#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace srg {

enum class Locality {
    none,          // D_k = I
    log_distance,  // D_k(i, i) = log(1 + ||e_i - e_k||)
};

std::string_view to_string(Locality mode);
Locality parse_locality(std::string_view text);

struct Hyperparams {
    double lambda = 0.1;  // sparsity weight
    double gamma = 0.1;   // image-space reconstruction weight, 0 < gamma < 1
    double outer_tol = 1e-5;
    Index max_outer_iter = 100;
    double lasso_tol = 1e-7;
    Index lasso_max_iter = 10000;
    Locality locality = Locality::none;
};

void validate(const Hyperparams& hp);

/// Diagonals of the per-class locality penalties: entries(k, i) = D_k(i, i).
struct LocalityWeights {
    Matrix entries;
    /// Class index pairs (k, i), k < i, whose embeddings coincide; their entries were clamped.
    std::vector<std::pair<Index, Index>> duplicate_pairs;
};

inline constexpr double kLocalityFloor = 1e-6;

LocalityWeights build_locality(const Matrix& semantic, Locality mode);
inline LocalityWeights build_locality(const EmbeddingSpace& semantic, Locality mode) {
    return build_locality(semantic.prototypes, mode);
}

struct AStepOptions {
    /// Replaces hp.gamma for this step; 0 drops the image rows entirely.
    std::optional<double> gamma_override;
    /// Previous coefficient matrix to warm-start every per-class solve from.
    const Matrix* warm_start = nullptr;
    /// OpenMP thread count for the per-class solves; 0 uses the runtime default.
    int threads = 0;
};

struct AStepResult {
    Matrix coefficients;             // K x K, column k = alpha_k, zero diagonal
    Vector kkt_residuals;            // per class, in beta coordinates
    std::vector<Index> unconverged;  // class indices whose solve hit the sweep cap
};

/// NotConverged for one class of an A-step; `best` is that class's beta.
class ClassNotConverged : public NotConverged {
public:
    ClassNotConverged(Index class_index, const NotConverged& inner)
        : NotConverged("class " + std::to_string(class_index) + ": " + inner.what(), inner.best),
          class_index(class_index) {}
    Index class_index;
};

/// Coefficient update. For each class k solves
///   min ||e_k - E a||^2 + g ||f_k - F a||^2 + lambda ||D_k a||_1,  a_k = 0
/// as a LASSO in beta = D_k a over the stacked design [E D_k^-1 ; sqrt(g) F D_k^-1].
/// Class solves run in parallel; output is independent of the thread count.
AStepResult a_step_detailed(const Matrix& semantic, const Matrix& image, const LocalityWeights& weights,
                            const Hyperparams& hp, const AStepOptions& options = {});

/// Single-threaded reference for `a_step_detailed`.
AStepResult a_step_serial(const Matrix& semantic, const Matrix& image, const LocalityWeights& weights,
                          const Hyperparams& hp, const AStepOptions& options = {});

/// As `a_step_detailed`, but throws ClassNotConverged for the first failing class.
Matrix a_step(const Matrix& semantic, const Matrix& image, const LocalityWeights& weights, const Hyperparams& hp,
              const AStepOptions& options = {});

/// Condition number of the unseen rows of (I - A).
double unseen_block_condition(const Matrix& coefficients, Index num_seen);

inline constexpr double kMaxBlockCondition = 1e12;

/// Unseen image prototypes minimizing ||[F_s, F_u] (I - A)||_F for fixed A.
/// Throws SingularBlock when the unseen rows of (I - A) are rank deficient or
/// their condition number exceeds kMaxBlockCondition.
Matrix f_step(const Matrix& seen_prototypes, const Matrix& coefficients);

/// sum_k ||e_k - E a_k||^2 + gamma ||f_k - F a_k||^2 + lambda ||D_k a_k||_1
double objective(const Matrix& semantic, const Matrix& image, const Matrix& coefficients,
                 const LocalityWeights& weights, const Hyperparams& hp);

struct SrgModel {
    Matrix coefficients;           // A, K x K
    Matrix seen_prototypes;        // F_s, d x K_s
    Matrix synthesized_unseen;     // F_u, d x K_u
    std::vector<double> loss_trace;
    bool converged = false;
    std::vector<int> class_order;  // canonical: seen then unseen
    Index num_seen = 0;
    Hyperparams hyperparams;
    bool normalized_features = false;  // samples were scaled to unit norm before averaging

    [[nodiscard]] Index num_classes() const { return coefficients.cols(); }
    [[nodiscard]] Matrix image_prototypes() const;
    [[nodiscard]] EmbeddingSpace image_space() const;
};

enum class FitStage { a_step, f_step };

struct FitOptions {
    int threads = 0;
    /// Receives the objective before and after every A-step and F-step (same F for the A-step).
    std::function<void(Index iteration, FitStage stage, double before, double after)> audit;
};

/// Alternates A-steps and F-steps. The first A-step ignores the image term
/// since the unseen prototypes are not known yet. Stops once the relative
/// objective change falls below hp.outer_tol or after hp.max_outer_iter
/// iterations. Solver caps set `converged = false` but still return a model.
///
/// `semantic` columns must follow the canonical order; its first
/// `seen_prototypes.cols()` classes are the seen ones.
SrgModel fit(const EmbeddingSpace& semantic, const Matrix& seen_prototypes, const Hyperparams& hp,
             const FitOptions& options = {});

}  // namespace srg

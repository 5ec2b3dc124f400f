#pragma once

#include "srg/data_model.hpp"
#include "srg/errors.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace srg {

/// min_beta ||target - design * beta||^2 + lambda * ||beta||_1  subject to beta[excluded] = 0.
struct LassoProblem {
    Matrix design;
    Vector target;
    double lambda = 0.0;
    Index excluded = 0;
};

struct LassoSolution {
    Vector beta;
    Index iterations = 0;
    double kkt_residual = 0.0;
};

struct LassoOptions {
    double tol = 1e-7;
    Index max_iter = 10000;
    /// Coordinate visit order for each sweep; empty means 0..K-1.
    std::vector<Index> visit_order;
    /// Starting point; the excluded coordinate is zeroed. Empty means start at zero.
    std::optional<Vector> warm_start;
    /// Called with the coefficients after every full sweep.
    std::function<void(const Vector&)> on_sweep;
};

/// Raised when the sweep cap is hit; `best` holds the last iterate and its KKT residual.
class NotConverged : public Error {
public:
    NotConverged(const std::string& what, LassoSolution best) : Error(what), best(std::move(best)) {}
    LassoSolution best;
};

void validate(const LassoProblem& problem);

/// Cyclic coordinate descent with soft-thresholding.
///
/// Converges when the largest coordinate change in a sweep drops below `tol`
/// and the KKT residual is below 10 * tol. Zero-norm design columns keep a
/// zero coefficient.
LassoSolution solve_lasso(const LassoProblem& problem, const LassoOptions& options = {});
LassoSolution solve_lasso(const LassoProblem& problem, double tol, Index max_iter);

/// Largest violation of the subgradient optimality conditions over the free coordinates.
///   beta_j != 0:  |2 x_j'(X beta - y) + lambda sign(beta_j)|
///   beta_j == 0:  max(|2 x_j'(X beta - y)| - lambda, 0)
double kkt_residual(const LassoProblem& problem, const Vector& beta);

double lasso_objective(const LassoProblem& problem, const Vector& beta);

/// sign(z) * max(|z| - t, 0)
inline double soft_threshold(double z, double t) {
    if (z > t) {
        return z - t;
    }
    if (z < -t) {
        return z + t;
    }
    return 0.0;
}

}  // namespace srg

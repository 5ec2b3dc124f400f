#include "srg/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace srg {

void validate(const LassoProblem& problem) {
    if (problem.design.rows() != problem.target.size()) {
        throw DimensionMismatch("design has " + std::to_string(problem.design.rows()) + " rows, target has " +
                                std::to_string(problem.target.size()));
    }
    if (problem.design.cols() == 0) {
        throw DimensionMismatch("design has no columns");
    }
    if (problem.excluded < 0 || problem.excluded >= problem.design.cols()) {
        throw ValidationError("excluded coordinate " + std::to_string(problem.excluded) + " out of range");
    }
    if (!(problem.lambda >= 0.0) || !std::isfinite(problem.lambda)) {
        throw ValidationError("lambda must be finite and >= 0");
    }
    if (!problem.design.allFinite() || !problem.target.allFinite()) {
        throw ValidationError("LASSO problem contains NaN or Inf");
    }
}

double kkt_residual(const LassoProblem& problem, const Vector& beta) {
    if (beta.size() != problem.design.cols()) {
        throw DimensionMismatch("beta length " + std::to_string(beta.size()) + " != design columns " +
                                std::to_string(problem.design.cols()));
    }
    const Vector grad = 2.0 * (problem.design.transpose() * (problem.design * beta - problem.target));
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        if (j == problem.excluded) {
            continue;
        }
        double v = 0.0;
        if (beta[j] > 0.0) {
            v = std::abs(grad[j] + problem.lambda);
        } else if (beta[j] < 0.0) {
            v = std::abs(grad[j] - problem.lambda);
        } else {
            v = std::max(std::abs(grad[j]) - problem.lambda, 0.0);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

double lasso_objective(const LassoProblem& problem, const Vector& beta) {
    return (problem.target - problem.design * beta).squaredNorm() + problem.lambda * beta.lpNorm<1>();
}

namespace {

constexpr Index kRefineEvery = 10;

/// Feature-sign active-set search started from the coordinate-descent iterate.
/// Each round optionally activates the most violating zero coordinate, solves
/// the smooth problem on the current sign pattern, and keeps the best point
/// among the solution and every zero crossing on the way to it.
void refine_active_set(const LassoProblem& problem, const Vector& col_sq, Vector& beta) {
    const Matrix& x = problem.design;
    const Index n = beta.size();
    const double lambda = problem.lambda;
    Vector b = beta;
    double current = lasso_objective(problem, b);
    const double start = current;

    for (Index round = 0; round < 2 * n + 10; ++round) {
        const Vector grad = 2.0 * (x.transpose() * (x * b - problem.target));
        Index add = -1;
        double worst = lambda;
        for (Index j = 0; j < n; ++j) {
            if (b[j] == 0.0 && j != problem.excluded && col_sq[j] != 0.0 && std::abs(grad[j]) > worst) {
                worst = std::abs(grad[j]);
                add = j;
            }
        }
        std::vector<Index> support;
        for (Index j = 0; j < n; ++j) {
            if (b[j] != 0.0 || j == add) {
                support.push_back(j);
            }
        }
        if (support.empty()) {
            break;
        }
        const Index m = static_cast<Index>(support.size());
        Matrix xs(x.rows(), m);
        Vector signs(m), from(m);
        for (Index i = 0; i < m; ++i) {
            const Index j = support[i];
            xs.col(i) = x.col(j);
            from[i] = b[j];
            signs[i] = j == add ? (grad[j] > 0.0 ? -1.0 : 1.0) : (b[j] > 0.0 ? 1.0 : -1.0);
        }
        const Vector rhs = xs.transpose() * problem.target - 0.5 * lambda * signs;
        const Matrix gram = xs.transpose() * xs;
        const auto cod = gram.completeOrthogonalDecomposition();
        const Vector to = cod.solve(rhs);
        if (!to.allFinite()) {
            break;
        }
        std::vector<Vector> targets{to};
        // singular gram: the l1 term still falls along null directions
        const Vector drift = gram * cod.solve(signs) - signs;
        if (lambda > 0.0 && drift.norm() > 1e-9 * signs.norm()) {
            double step = std::numeric_limits<double>::infinity();
            Index hit = -1;
            for (Index i = 0; i < m; ++i) {
                if (to[i] * drift[i] < 0.0 && -to[i] / drift[i] < step) {
                    step = -to[i] / drift[i];
                    hit = i;
                }
            }
            if (hit >= 0) {
                Vector far = to + step * drift;
                far[hit] = 0.0;
                targets.push_back(std::move(far));
            }
        }

        Vector best = b;
        double best_obj = current;
        for (const Vector& target : targets) {
            auto point = [&](double t, Index zeroed) {
                Vector c = b;
                for (Index i = 0; i < m; ++i) {
                    c[support[i]] = i == zeroed ? 0.0 : from[i] + t * (target[i] - from[i]);
                }
                return c;
            };
            auto consider = [&](const Vector& c) {
                const double f = lasso_objective(problem, c);
                if (f < best_obj) {
                    best_obj = f;
                    best = c;
                }
            };
            consider(point(1.0, -1));
            for (Index i = 0; i < m; ++i) {
                if (from[i] != 0.0 && target[i] * from[i] < 0.0) {
                    consider(point(from[i] / (from[i] - target[i]), i));
                }
            }
        }
        if (!(best_obj < current)) {
            break;
        }
        b = std::move(best);
        current = best_obj;
    }
    if (current <= start) {
        beta = std::move(b);
    }
}

}  // namespace

LassoSolution solve_lasso(const LassoProblem& problem, double tol, Index max_iter) {
    LassoOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    return solve_lasso(problem, opts);
}

LassoSolution solve_lasso(const LassoProblem& problem, const LassoOptions& options) {
    validate(problem);
    if (!(options.tol > 0.0)) {
        throw ValidationError("tol must be > 0");
    }
    if (options.max_iter < 1) {
        throw ValidationError("max_iter must be >= 1");
    }

    const Matrix& x = problem.design;
    const Vector& y = problem.target;
    const Index n = x.cols();

    std::vector<Index> order = options.visit_order;
    if (order.empty()) {
        order.resize(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index{0});
    } else {
        auto sorted = order;
        std::ranges::sort(sorted);
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] != static_cast<Index>(i) || sorted.size() != static_cast<std::size_t>(n)) {
                throw ValidationError("visit_order must be a permutation of 0..K-1");
            }
        }
    }

    const Vector col_sq = x.colwise().squaredNorm().transpose();
    const double half_lambda = 0.5 * problem.lambda;

    Vector beta = Vector::Zero(n);
    if (options.warm_start) {
        if (options.warm_start->size() != n) {
            throw DimensionMismatch("warm start has the wrong length");
        }
        beta = *options.warm_start;
    }
    beta[problem.excluded] = 0.0;
    for (Index j = 0; j < n; ++j) {
        if (col_sq[j] == 0.0) {
            beta[j] = 0.0;
        }
    }

    Vector residual(y.size());
    double kkt = 0.0;
    for (Index sweep = 1; sweep <= options.max_iter; ++sweep) {
        // refreshed every sweep so incremental updates cannot drift
        residual.noalias() = y - x * beta;
        double max_delta = 0.0;
        for (Index j : order) {
            if (j == problem.excluded || col_sq[j] == 0.0) {
                continue;
            }
            const double rho = x.col(j).dot(residual) + col_sq[j] * beta[j];
            const double updated = soft_threshold(rho, half_lambda) / col_sq[j];
            const double delta = updated - beta[j];
            if (delta != 0.0) {
                residual.noalias() -= delta * x.col(j);
                beta[j] = updated;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (!beta.allFinite()) {
            throw NumericalFailure("non-finite coefficient in coordinate descent at sweep " + std::to_string(sweep));
        }
        if (options.on_sweep) {
            options.on_sweep(beta);
        }
        if (max_delta < options.tol) {
            kkt = kkt_residual(problem, beta);
            if (kkt < 10.0 * options.tol) {
                return {std::move(beta), sweep, kkt};
            }
        }
        if (sweep % kRefineEvery == 0) {
            refine_active_set(problem, col_sq, beta);
        }
    }
    kkt = kkt_residual(problem, beta);
    throw NotConverged("coordinate descent hit " + std::to_string(options.max_iter) +
                           " sweeps (KKT residual " + std::to_string(kkt) + ")",
                       {std::move(beta), options.max_iter, kkt});
}

}  // namespace srg

#include "srg/srg_learner.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace srg {

std::string_view to_string(Locality mode) {
    switch (mode) {
        case Locality::none: return "none";
        case Locality::log_distance: return "log_distance";
    }
    return "none";
}

Locality parse_locality(std::string_view text) {
    if (text == "none") {
        return Locality::none;
    }
    if (text == "log_distance") {
        return Locality::log_distance;
    }
    throw ValidationError("unknown locality mode '" + std::string(text) + "'");
}

void validate(const Hyperparams& hp) {
    if (!(hp.lambda >= 0.0) || !std::isfinite(hp.lambda)) {
        throw ValidationError("lambda must be finite and >= 0");
    }
    if (!(hp.gamma > 0.0 && hp.gamma < 1.0)) {
        throw ValidationError("gamma must lie in (0, 1)");
    }
    if (!(hp.outer_tol > 0.0) || !(hp.lasso_tol > 0.0)) {
        throw ValidationError("tolerances must be > 0");
    }
    if (hp.max_outer_iter < 1 || hp.lasso_max_iter < 1) {
        throw ValidationError("iteration caps must be >= 1");
    }
}

LocalityWeights build_locality(const Matrix& semantic, Locality mode) {
    const Index k = semantic.cols();
    if (k < 2) {
        throw TooFewClasses("locality weights need at least 2 classes");
    }
    LocalityWeights w{Matrix::Ones(k, k), {}};
    if (mode == Locality::none) {
        return w;
    }
    for (Index a = 0; a < k; ++a) {
        for (Index b = a + 1; b < k; ++b) {
            const double dist = (semantic.col(a) - semantic.col(b)).norm();
            double g = std::log1p(dist);
            if (dist == 0.0) {
                w.duplicate_pairs.emplace_back(a, b);
            }
            if (!(g > kLocalityFloor)) {
                g = kLocalityFloor;
            }
            w.entries(a, b) = g;
            w.entries(b, a) = g;
        }
    }
    return w;
}

namespace {

void check_shapes(const Matrix& semantic, const Matrix& image, const LocalityWeights& weights) {
    const Index k = semantic.cols();
    if (image.cols() != k) {
        throw DimensionMismatch("image space has " + std::to_string(image.cols()) + " classes, semantic has " +
                                std::to_string(k));
    }
    if (weights.entries.rows() != k || weights.entries.cols() != k) {
        throw DimensionMismatch("locality weights are not K x K");
    }
}

struct ClassOutcome {
    Vector alpha;
    double kkt = 0.0;
    bool converged = true;
};

ClassOutcome solve_class(Index k, const Matrix& semantic, const Matrix& image, const LocalityWeights& weights,
                         const Hyperparams& hp, double gamma, const Matrix* warm) {
    const Index p = semantic.rows();
    const Index d = image.rows();
    const Index n = semantic.cols();
    const bool with_image = gamma > 0.0;
    const double root_gamma = std::sqrt(gamma);

    const Vector inv_d = weights.entries.row(k).transpose().cwiseInverse();

    LassoProblem problem;
    problem.lambda = hp.lambda;
    problem.excluded = k;
    problem.design.resize(with_image ? p + d : p, n);
    problem.target.resize(problem.design.rows());
    problem.design.topRows(p) = semantic * inv_d.asDiagonal();
    problem.target.head(p) = semantic.col(k);
    if (with_image) {
        problem.design.bottomRows(d) = root_gamma * (image * inv_d.asDiagonal());
        problem.target.tail(d) = root_gamma * image.col(k);
    }

    LassoOptions opts;
    opts.tol = hp.lasso_tol;
    opts.max_iter = hp.lasso_max_iter;
    if (warm != nullptr) {
        opts.warm_start = warm->col(k).cwiseProduct(weights.entries.row(k).transpose());
    }

    ClassOutcome out;
    Vector beta;
    try {
        auto sol = solve_lasso(problem, opts);
        beta = std::move(sol.beta);
        out.kkt = sol.kkt_residual;
    } catch (const NotConverged& e) {
        beta = e.best.beta;
        out.kkt = e.best.kkt_residual;
        out.converged = false;
    }
    out.alpha = beta.cwiseProduct(inv_d);
    out.alpha[k] = 0.0;
    return out;
}

double effective_gamma(const Hyperparams& hp, const AStepOptions& options) {
    const double g = options.gamma_override.value_or(hp.gamma);
    if (!(g >= 0.0) || !std::isfinite(g)) {
        throw ValidationError("gamma override must be finite and >= 0");
    }
    return g;
}

void prepare(const Matrix& semantic, const Matrix& image, const LocalityWeights& weights, const Hyperparams& hp,
             const AStepOptions& options) {
    check_shapes(semantic, image, weights);
    if (!(hp.lambda >= 0.0)) {
        throw ValidationError("lambda must be >= 0");
    }
    if (options.warm_start != nullptr &&
        (options.warm_start->rows() != semantic.cols() || options.warm_start->cols() != semantic.cols())) {
        throw DimensionMismatch("warm-start coefficients are not K x K");
    }
}

}  // namespace

AStepResult a_step_detailed(const Matrix& semantic, const Matrix& image, const LocalityWeights& weights,
                            const Hyperparams& hp, const AStepOptions& options) {
    prepare(semantic, image, weights, hp, options);
    const double gamma = effective_gamma(hp, options);
    const Index n = semantic.cols();

    std::vector<ClassOutcome> outcomes(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (Index k = 0; k < n; ++k) {
        try {
            outcomes[static_cast<std::size_t>(k)] =
                solve_class(k, semantic, image, weights, hp, gamma, options.warm_start);
        } catch (...) {
            errors[static_cast<std::size_t>(k)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    AStepResult result{Matrix::Zero(n, n), Vector::Zero(n), {}};
    for (Index k = 0; k < n; ++k) {
        auto& o = outcomes[static_cast<std::size_t>(k)];
        result.coefficients.col(k) = o.alpha;
        result.kkt_residuals[k] = o.kkt;
        if (!o.converged) {
            result.unconverged.push_back(k);
        }
    }
    return result;
}

AStepResult a_step_serial(const Matrix& semantic, const Matrix& image, const LocalityWeights& weights,
                          const Hyperparams& hp, const AStepOptions& options) {
    prepare(semantic, image, weights, hp, options);
    const double gamma = effective_gamma(hp, options);
    const Index n = semantic.cols();

    AStepResult result{Matrix::Zero(n, n), Vector::Zero(n), {}};
    for (Index k = 0; k < n; ++k) {
        auto o = solve_class(k, semantic, image, weights, hp, gamma, options.warm_start);
        result.coefficients.col(k) = o.alpha;
        result.kkt_residuals[k] = o.kkt;
        if (!o.converged) {
            result.unconverged.push_back(k);
        }
    }
    return result;
}

Matrix a_step(const Matrix& semantic, const Matrix& image, const LocalityWeights& weights, const Hyperparams& hp,
              const AStepOptions& options) {
    auto result = a_step_detailed(semantic, image, weights, hp, options);
    if (!result.unconverged.empty()) {
        const Index k = result.unconverged.front();
        LassoSolution best{result.coefficients.col(k).cwiseProduct(weights.entries.row(k).transpose()),
                           hp.lasso_max_iter, result.kkt_residuals[k]};
        throw ClassNotConverged(k, NotConverged("LASSO hit the sweep cap", std::move(best)));
    }
    return std::move(result.coefficients);
}

double unseen_block_condition(const Matrix& coefficients, Index num_seen) {
    const Index k = coefficients.cols();
    const Index k_unseen = k - num_seen;
    if (k_unseen <= 0) {
        return 1.0;
    }
    const Matrix theta = Matrix::Identity(k, k) - coefficients;
    Eigen::JacobiSVD<Matrix> svd(theta.bottomRows(k_unseen));
    const Vector& s = svd.singularValues();
    const double smin = s[s.size() - 1];
    if (!(smin > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return s[0] / smin;
}

Matrix f_step(const Matrix& seen_prototypes, const Matrix& coefficients) {
    const Index k = coefficients.cols();
    const Index k_seen = seen_prototypes.cols();
    if (coefficients.rows() != k) {
        throw NonSquare("coefficient matrix is not square");
    }
    if (k_seen > k) {
        throw DimensionMismatch("more seen prototypes than classes");
    }
    const Index k_unseen = k - k_seen;
    if (k_unseen == 0) {
        return Matrix(seen_prototypes.rows(), 0);
    }

    const double cond = unseen_block_condition(coefficients, k_seen);
    if (!(cond <= kMaxBlockCondition)) {
        throw SingularBlock(cond);
    }

    const Matrix theta = Matrix::Identity(k, k) - coefficients;
    const Matrix fixed_part = seen_prototypes * theta.topRows(k_seen);  // d x K
    // F_u theta_u = -F_s theta_s in the least-squares sense; exact when the
    // seen columns of theta_u vanish.
    const Matrix theta_u_t = theta.bottomRows(k_unseen).transpose();  // K x K_u
    Matrix unseen_t = theta_u_t.colPivHouseholderQr().solve(-fixed_part.transpose());
    if (!unseen_t.allFinite()) {
        throw NumericalFailure("non-finite synthesized prototypes");
    }
    return unseen_t.transpose();
}

double objective(const Matrix& semantic, const Matrix& image, const Matrix& coefficients,
                 const LocalityWeights& weights, const Hyperparams& hp) {
    const Index k = semantic.cols();
    if (image.cols() != k || coefficients.rows() != k || coefficients.cols() != k || weights.entries.rows() != k ||
        weights.entries.cols() != k) {
        throw DimensionMismatch("objective inputs disagree on the class count");
    }
    const double semantic_term = (semantic - semantic * coefficients).squaredNorm();
    const double image_term = (image - image * coefficients).squaredNorm();
    const double penalty = weights.entries.transpose().cwiseProduct(coefficients.cwiseAbs()).sum();
    return semantic_term + hp.gamma * image_term + hp.lambda * penalty;
}

Matrix SrgModel::image_prototypes() const {
    Matrix f(seen_prototypes.rows(), seen_prototypes.cols() + synthesized_unseen.cols());
    f << seen_prototypes, synthesized_unseen;
    return f;
}

EmbeddingSpace SrgModel::image_space() const {
    return make_space("image", image_prototypes(), class_order);
}

SrgModel fit(const EmbeddingSpace& semantic, const Matrix& seen_prototypes, const Hyperparams& hp,
             const FitOptions& options) {
    validate(hp);
    const Index k = semantic.num_classes();
    const Index k_seen = seen_prototypes.cols();
    if (k_seen < 1 || k_seen > k) {
        throw DimensionMismatch("seen prototype count must lie in [1, K]");
    }
    if (!seen_prototypes.allFinite() || !semantic.prototypes.allFinite()) {
        throw ValidationError("fit inputs contain NaN or Inf");
    }
    const Index k_unseen = k - k_seen;
    const Matrix& e = semantic.prototypes;

    SrgModel model;
    model.class_order = semantic.class_ids;
    model.num_seen = k_seen;
    model.hyperparams = hp;
    model.seen_prototypes = seen_prototypes;
    model.synthesized_unseen = Matrix::Zero(seen_prototypes.rows(), k_unseen);

    const LocalityWeights weights = build_locality(e, hp.locality);
    Matrix image = model.image_prototypes();
    bool solves_converged = true;

    auto run_a_step = [&](Index iteration, std::optional<double> gamma_override, const Matrix* warm) {
        const double before = options.audit && warm != nullptr ? objective(e, image, *warm, weights, hp) : 0.0;
        AStepOptions ao{gamma_override, warm, options.threads};
        auto r = a_step_detailed(e, image, weights, hp, ao);
        solves_converged = solves_converged && r.unconverged.empty();
        model.coefficients = std::move(r.coefficients);
        if (options.audit && warm != nullptr) {
            options.audit(iteration, FitStage::a_step, before, objective(e, image, model.coefficients, weights, hp));
        }
    };
    auto run_f_step = [&](Index iteration) {
        const double before = options.audit ? objective(e, image, model.coefficients, weights, hp) : 0.0;
        model.synthesized_unseen = f_step(seen_prototypes, model.coefficients);
        image.rightCols(k_unseen) = model.synthesized_unseen;
        const double after = objective(e, image, model.coefficients, weights, hp);
        if (options.audit) {
            options.audit(iteration, FitStage::f_step, before, after);
        }
        return after;
    };

    // the unseen image prototypes are unknown on the first pass
    run_a_step(1, 0.0, nullptr);
    if (k_unseen == 0) {
        model.loss_trace.push_back(objective(e, image, model.coefficients, weights, hp));
        model.converged = solves_converged;
        return model;
    }
    model.loss_trace.push_back(run_f_step(1));

    bool outer_converged = false;
    for (Index it = 2; it <= hp.max_outer_iter; ++it) {
        const Matrix previous = model.coefficients;
        run_a_step(it, std::nullopt, &previous);
        const double loss = run_f_step(it);
        const double last = model.loss_trace.back();
        model.loss_trace.push_back(loss);
        if (std::abs(loss - last) / std::max(last, 1e-12) < hp.outer_tol) {
            outer_converged = true;
            break;
        }
    }
    model.converged = outer_converged && solves_converged;
    return model;
}

}  // namespace srg

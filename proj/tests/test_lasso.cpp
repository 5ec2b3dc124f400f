#include "oracles.hpp"
#include "srg/errors.hpp"
#include "srg/lasso.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace srg;

namespace {

LassoProblem random_problem(std::mt19937_64& rng, Index m, Index k, double lambda, Index excluded) {
    LassoProblem p;
    p.design = oracle::random_matrix(m, k, rng);
    p.target = oracle::random_matrix(m, 1, rng);
    p.lambda = lambda;
    p.excluded = excluded;
    return p;
}

Index support_size(const Vector& b) {
    return (b.array() != 0.0).count();
}

}  // namespace

TEST_CASE("soft_threshold") {
    CHECK(soft_threshold(5.0, 2.0) == 3.0);
    CHECK(soft_threshold(-1.0, 2.0) == 0.0);
    CHECK(soft_threshold(0.0, 0.0) == 0.0);
    CHECK(soft_threshold(-5.0, 2.0) == -3.0);
    CHECK(soft_threshold(2.0, 2.0) == 0.0);
}

TEST_CASE("large lambda gives the zero vector") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 10; ++t) {
        LassoProblem p = random_problem(rng, 6, 4, 0.0, 0);
        const Vector xty = p.design.transpose() * p.target;
        p.lambda = 2.0 * xty.cwiseAbs().maxCoeff() + 1e-9;
        const LassoSolution s = solve_lasso(p);
        CHECK(s.beta.isZero(0.0));
        CHECK(s.iterations == 1);
    }
}

TEST_CASE("lambda 0 on a square reduced system equals least squares") {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 10; ++t) {
        const Index m = 5;
        LassoProblem p = random_problem(rng, m, m + 1, 0.0, t % (m + 1));
        // keep the reduced system well conditioned
        p.design += 3.0 * Matrix::Identity(m, m + 1);
        Matrix reduced(m, m);
        for (Index j = 0, c = 0; j < m + 1; ++j) {
            if (j != p.excluded) {
                reduced.col(c++) = p.design.col(j);
            }
        }
        const Vector ls = oracle::least_squares_normal(reduced, p.target);
        const LassoSolution s = solve_lasso(p);
        CHECK(s.beta[p.excluded] == 0.0);
        for (Index j = 0, c = 0; j < m + 1; ++j) {
            if (j != p.excluded) {
                CHECK(std::abs(s.beta[j] - ls[c++]) < 1e-8);
            }
        }
    }
}

TEST_CASE("random 6x4 problem matches the projected-gradient oracle") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 20; ++t) {
        const LassoProblem p = random_problem(rng, 6, 4, 0.1, t % 4);
        const LassoSolution s = solve_lasso(p);
        const auto ref = oracle::lasso_projected(p.design, p.target, p.lambda, p.excluded);
        CHECK(std::abs(lasso_objective(p, s.beta) - ref.objective) < 1e-6);
        CHECK(s.kkt_residual < 1e-6);
    }
}

TEST_CASE("kkt_residual") {
    SUBCASE("closed-form scalar solution") {
        LassoProblem p;
        p.design = (Matrix(3, 2) << 1.0, 7.0, 2.0, 7.0, -1.0, 7.0).finished();
        p.target = (Vector(3) << 3.0, 1.0, 2.0).finished();
        p.lambda = 0.8;
        p.excluded = 1;
        const Vector x = p.design.col(0);
        Vector beta = Vector::Zero(2);
        beta[0] = soft_threshold(x.dot(p.target), p.lambda / 2.0) / x.squaredNorm();
        CHECK(kkt_residual(p, beta) < 1e-12);
    }
    SUBCASE("zero vector with huge lambda") {
        std::mt19937_64 rng(24);
        const LassoProblem p = random_problem(rng, 5, 3, 1e6, 0);
        CHECK(kkt_residual(p, Vector::Zero(3)) == 0.0);
    }
    SUBCASE("perturbing an optimal coordinate") {
        std::mt19937_64 rng(25);
        const LassoProblem p = random_problem(rng, 8, 4, 0.1, 2);
        Vector beta = solve_lasso(p).beta;
        beta[0] += 0.1;
        CHECK(kkt_residual(p, beta) > 0.0);
    }
    SUBCASE("length mismatch") {
        std::mt19937_64 rng(26);
        const LassoProblem p = random_problem(rng, 4, 3, 0.1, 0);
        CHECK_THROWS_AS(kkt_residual(p, Vector::Zero(2)), DimensionMismatch);
    }
}

TEST_CASE("objective never increases across sweeps and the excluded coordinate stays zero") {
    std::mt19937_64 rng(27);
    for (int t = 0; t < 50; ++t) {
        const Index m = 3 + t % 8, k = 2 + t % 6;
        const LassoProblem p = random_problem(rng, m, k, (t % 4) * 0.3, t % k);
        double last = lasso_objective(p, Vector::Zero(k));
        bool monotone = true, pinned = true;
        LassoOptions o;
        o.on_sweep = [&](const Vector& b) {
            const double f = lasso_objective(p, b);
            monotone = monotone && f <= last + 1e-12 * std::max(1.0, last);
            pinned = pinned && b[p.excluded] == 0.0;
            last = f;
        };
        solve_lasso(p, o);
        CHECK(monotone);
        CHECK(pinned);
    }
}

TEST_CASE("support shrinks along a lambda ladder") {
    std::mt19937_64 rng(28);
    for (int t = 0; t < 10; ++t) {
        const LassoProblem base = random_problem(rng, 30, 6, 0.0, t % 6);
        Index previous = 6;
        for (double lambda : {0.01, 0.1, 1.0, 3.0, 10.0, 30.0, 100.0}) {
            LassoProblem p = base;
            p.lambda = lambda;
            const Index s = support_size(solve_lasso(p).beta);
            CHECK(s <= previous);
            previous = s;
        }
    }
}

TEST_CASE("visit order does not change the optimum") {
    std::mt19937_64 rng(29);
    for (int t = 0; t < 20; ++t) {
        const Index k = 5;
        const LassoProblem p = random_problem(rng, 7, k, 0.2, t % k);
        LassoOptions forward, shuffled;
        shuffled.visit_order.resize(k);
        std::iota(shuffled.visit_order.begin(), shuffled.visit_order.end(), Index{0});
        std::shuffle(shuffled.visit_order.begin(), shuffled.visit_order.end(), rng);
        const double a = lasso_objective(p, solve_lasso(p, forward).beta);
        const double b = lasso_objective(p, solve_lasso(p, shuffled).beta);
        CHECK(std::abs(a - b) < 10 * forward.tol);
    }
}

TEST_CASE("warm start reaches the same optimum") {
    std::mt19937_64 rng(30);
    const LassoProblem p = random_problem(rng, 9, 5, 0.3, 1);
    const LassoSolution cold = solve_lasso(p);
    LassoOptions o;
    o.warm_start = Vector::Ones(5) * 2.0;
    const LassoSolution warm = solve_lasso(p, o);
    CHECK(warm.beta[1] == 0.0);
    CHECK(std::abs(lasso_objective(p, cold.beta) - lasso_objective(p, warm.beta)) < 1e-9);
    o.warm_start = cold.beta;
    CHECK(solve_lasso(p, o).iterations <= 2);
}

TEST_CASE("zero design column keeps a zero coefficient") {
    std::mt19937_64 rng(31);
    LassoProblem p = random_problem(rng, 6, 4, 0.05, 0);
    p.design.col(2).setZero();
    const LassoSolution s = solve_lasso(p);
    CHECK(s.beta[2] == 0.0);
    CHECK(s.kkt_residual < 1e-6);
}

TEST_CASE("sweep cap raises NotConverged with the last iterate") {
    std::mt19937_64 rng(32);
    LassoProblem p = random_problem(rng, 10, 6, 0.0, 0);
    p.design.col(2) = p.design.col(1) + 1e-3 * p.design.col(3);
    try {
        solve_lasso(p, 1e-7, 1);
        FAIL("expected NotConverged");
    } catch (const NotConverged& e) {
        CHECK(e.best.iterations == 1);
        CHECK(e.best.beta.size() == 6);
        CHECK(e.best.kkt_residual == doctest::Approx(kkt_residual(p, e.best.beta)));
    }
}

TEST_CASE("invalid problems") {
    std::mt19937_64 rng(33);
    LassoProblem p = random_problem(rng, 4, 3, 0.1, 0);
    SUBCASE("shape") {
        p.target = Vector::Zero(5);
        CHECK_THROWS_AS(solve_lasso(p), DimensionMismatch);
    }
    SUBCASE("excluded out of range") {
        p.excluded = 3;
        CHECK_THROWS_AS(solve_lasso(p), ValidationError);
    }
    SUBCASE("negative lambda") {
        p.lambda = -1.0;
        CHECK_THROWS_AS(solve_lasso(p), ValidationError);
    }
    SUBCASE("non-finite data") {
        p.design(0, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(solve_lasso(p), ValidationError);
    }
    SUBCASE("bad options") {
        CHECK_THROWS_AS(solve_lasso(p, 0.0, 10), ValidationError);
        CHECK_THROWS_AS(solve_lasso(p, 1e-7, 0), ValidationError);
        LassoOptions o;
        o.visit_order = {0, 0, 1};
        CHECK_THROWS_AS(solve_lasso(p, o), ValidationError);
    }
}

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "commands.hpp"
#include "oracles.hpp"
#include "srg/classifier.hpp"
#include "srg/clustering.hpp"
#include "srg/cv_tuner.hpp"
#include "srg/io.hpp"
#include "srg/lasso.hpp"
#include "srg/srg_learner.hpp"
#include "srg/synthetic.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace srg;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

Outcome criterion_lasso() {
    std::mt19937_64 rng(101);
    const double lambdas[] = {0.0, 0.01, 0.1, 1.0};
    std::uniform_int_distribution<int> m_dist(1, 12), k_dist(2, 8);
    double worst_kkt = 0.0, worst_gap = 0.0, solver_time = 0.0;
    for (int p = 0; p < 200; ++p) {
        LassoProblem prob;
        const Index m = m_dist(rng), k = k_dist(rng);
        prob.design = oracle::random_matrix(m, k, rng);
        prob.target = oracle::random_matrix(m, 1, rng);
        prob.lambda = lambdas[p % 4];
        prob.excluded = std::uniform_int_distribution<Index>(0, k - 1)(rng);

        const auto t0 = Clock::now();
        const LassoSolution sol = solve_lasso(prob);
        solver_time += seconds_since(t0);

        const auto ref = oracle::lasso_projected(prob.design, prob.target, prob.lambda, prob.excluded);
        const double f = oracle::lasso_objective(prob.design, prob.target, prob.lambda, sol.beta);
        worst_kkt = std::max(worst_kkt, kkt_residual(prob, sol.beta));
        worst_gap = std::max(worst_gap, std::abs(f - ref.objective));
    }
    std::ostringstream d;
    d << "max kkt " << worst_kkt << ", max |obj - oracle| " << worst_gap << ", solver time " << solver_time << " s";
    return {worst_kkt < 1e-6 && worst_gap < 1e-6 && solver_time < 30.0, d.str()};
}

Outcome criterion_f_step() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> ks_dist(2, 12), ku_dist(1, 4), d_dist(3, 20);
    double worst_block = 0.0, worst_stationary = 0.0;
    int checked = 0;
    while (checked < 100) {
        const Index ks = ks_dist(rng), ku = ku_dist(rng), d = d_dist(rng), k = ks + ku;
        Matrix a = 0.3 / std::sqrt(double(k)) * oracle::random_matrix(k, k, rng);
        a.diagonal().setZero();
        const Matrix fs = oracle::random_matrix(d, ks, rng, 5.0);
        if (unseen_block_condition(a, ks) >= 1e8) {
            continue;
        }
        ++checked;

        // unseen prototypes reconstructing only from other classes' columns: the block identity holds exactly
        Matrix a_block = a;
        a_block.bottomLeftCorner(ku, ks).setZero();
        const Matrix theta = Matrix::Identity(k, k) - a_block;
        const Matrix fu = f_step(fs, a_block);
        const Matrix lhs = fs * theta.topRightCorner(ks, ku) + fu * theta.bottomRightCorner(ku, ku);
        const double denom = std::max((fs * theta.topRightCorner(ks, ku)).norm(), 1e-12);
        worst_block = std::max(worst_block, lhs.norm() / denom);

        // general A: the image term's gradient in F_u vanishes
        const Matrix th = Matrix::Identity(k, k) - a;
        const Matrix fu2 = f_step(fs, a);
        const Matrix resid = fs * th.topRows(ks) + fu2 * th.bottomRows(ku);
        const Matrix grad = resid * th.bottomRows(ku).transpose();
        const double scale = std::max((fs * th.topRows(ks) * th.bottomRows(ku).transpose()).norm(), 1e-12);
        worst_stationary = std::max(worst_stationary, grad.norm() / scale);
    }
    std::ostringstream d;
    d << "max block residual ratio " << worst_block << ", max stationarity ratio " << worst_stationary;
    return {worst_block < 1e-9 && worst_stationary < 1e-9, d.str()};
}

Outcome criterion_descent() {
    int bad_trace = 0, not_converged = 0, max_iters = 0;
    double worst_rise = 0.0;
    for (int f = 0; f < 20; ++f) {
        SyntheticSpec spec;
        spec.seed = 300 + f;
        spec.k_seen = 8 + f % 5;
        spec.k_unseen = 1 + f % 3;
        spec.noise_sigma = 0.05 * (f % 3) / 2.0;
        const SyntheticData data = generate(spec);
        Hyperparams hp;
        hp.lambda = (f % 2) ? 0.1 : 1.0;
        hp.gamma = 0.1 + 0.2 * (f % 4);
        hp.locality = (f % 3 == 0) ? Locality::log_distance : Locality::none;
        FitOptions fo;
        fo.audit = [&](Index, FitStage, double before, double after) {
            worst_rise = std::max(worst_rise, after - before);
        };
        const SrgModel model = fit(data.semantic, compute_prototypes(data.train).seen, hp, fo);
        for (std::size_t i = 1; i < model.loss_trace.size(); ++i) {
            const double rise = model.loss_trace[i] - model.loss_trace[i - 1];
            worst_rise = std::max(worst_rise, rise);
            bad_trace += rise > 1e-9;
        }
        not_converged += !model.converged || model.loss_trace.size() > 100;
        max_iters = std::max<int>(max_iters, static_cast<int>(model.loss_trace.size()));
    }
    std::ostringstream d;
    d << "largest step increase " << worst_rise << ", trace violations " << bad_trace << ", unconverged "
      << not_converged << ", most outer iterations " << max_iters;
    return {bad_trace == 0 && worst_rise <= 1e-9 && not_converged == 0, d.str()};
}

double zsl_accuracy(const SyntheticData& data, const SrgModel& model) {
    const int ks[] = {1};
    return *evaluate(data.test, model.image_space(), Protocol::zsl, ks).u_to_u;
}

Outcome criterion_planted() {
    const auto t0 = Clock::now();
    SyntheticSpec spec;  // K_s = 12, K_u = 3, sparsity 3, no shift, no noise
    spec.seed = 404;
    const SyntheticData data = generate(spec);
    Hyperparams hp;
    hp.lambda = 0.01;
    hp.gamma = 0.1;
    const SrgModel model = fit(data.semantic, compute_prototypes(data.train).seen, hp);

    double worst_col = 0.0;
    for (Index j = 0; j < spec.k_unseen; ++j) {
        const auto truth = data.truth.unseen_prototypes.col(j);
        worst_col = std::max(worst_col, (model.synthesized_unseen.col(j) - truth).norm() / truth.norm());
    }
    Index support_errors = 0;
    const Matrix& planted = data.truth.coefficients;
    for (Index i = 0; i < planted.rows(); ++i) {
        for (Index j = 0; j < planted.cols(); ++j) {
            support_errors += (planted(i, j) != 0.0) != (model.coefficients(i, j) != 0.0);
        }
    }
    const double acc = zsl_accuracy(data, model);
    const double elapsed = seconds_since(t0);
    std::ostringstream d;
    d << "max column rel. error " << worst_col << ", support mismatches " << support_errors << ", zsl accuracy "
      << acc << ", test samples " << data.test.num_samples() << ", " << elapsed << " s";
    return {worst_col < 1e-4 && support_errors == 0 && acc == 1.0 && elapsed < 10.0, d.str()};
}

Outcome criterion_shift() {
    double sum0 = 0.0, sum8 = 0.0;
    for (int s = 0; s < 10; ++s) {
        for (double shift : {0.0, 0.8}) {
            SyntheticSpec spec;
            spec.seed = 500 + s;
            spec.shift = shift;
            const SyntheticData data = generate(spec);
            Hyperparams hp;
            hp.lambda = 0.01;
            hp.gamma = 0.1;
            const SrgModel model = fit(data.semantic, compute_prototypes(data.train).seen, hp);
            (shift == 0.0 ? sum0 : sum8) += zsl_accuracy(data, model);
        }
    }
    std::ostringstream d;
    d << "mean zsl accuracy shift 0: " << sum0 / 10 << ", shift 0.8: " << sum8 / 10;
    return {sum0 > sum8, d.str()};
}

Outcome criterion_sparsity() {
    double tuned_sum = 0.0, dense_sum = 0.0;
    std::ostringstream picks;
    for (int s = 0; s < 10; ++s) {
        SyntheticSpec spec;
        spec.seed = 600 + s;
        spec.noise_sigma = 0.05;
        spec.nuisance_classes = 4;
        const SyntheticData data = generate(spec);
        const Matrix seen = compute_prototypes(data.train).seen;

        GridSpec grid = GridSpec::defaults();
        grid.seed = s;
        const TuneResult tuned = grid_search(data.train, data.semantic, grid, Hyperparams{});
        Hyperparams hp;
        hp.lambda = tuned.best_lambda;
        hp.gamma = tuned.best_gamma;
        tuned_sum += zsl_accuracy(data, fit(data.semantic, seen, hp));
        picks << (s ? "," : "") << tuned.best_lambda;

        Hyperparams dense = hp;
        dense.lambda = 0.0;
        dense_sum += zsl_accuracy(data, fit(data.semantic, seen, dense));
    }
    std::ostringstream d;
    d << "mean zsl accuracy tuned: " << tuned_sum / 10 << ", lambda = 0: " << dense_sum / 10
      << " (tuned lambdas " << picks.str() << ")";
    return {tuned_sum >= dense_sum, d.str()};
}

Outcome criterion_clustering() {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> w(0.5, 1.0), weak(0.0, 0.05);

    // four connected blocks with weak cross links
    const std::vector<int> truth4{0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 3, 3, 3, 3, 3};
    const Index n4 = static_cast<Index>(truth4.size());
    Matrix a4(n4, n4);
    for (Index i = 0; i < n4; ++i) {
        for (Index j = 0; j < n4; ++j) {
            a4(i, j) = i == j ? 0.0 : (truth4[i] == truth4[j] ? w(rng) : weak(rng));
        }
    }
    const ClusterResult r4 = spectral_cluster(balance_graph(a4), 4, 7);
    const double ari = adjusted_rand_index(r4.assignments, truth4);

    // three disconnected blocks
    const std::vector<int> truth3{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
    const Index n3 = static_cast<Index>(truth3.size());
    Matrix a3 = Matrix::Zero(n3, n3);
    for (Index i = 0; i < n3; ++i) {
        for (Index j = 0; j < n3; ++j) {
            if (i != j && truth3[i] == truth3[j]) {
                a3(i, j) = w(rng);
            }
        }
    }
    const ClusterResult r3 = spectral_cluster(balance_graph(a3), 3, 7);
    const auto& ev = r3.eigengap_trace;
    const bool zero_structure = ev.size() == 4 && std::abs(ev[0]) < 1e-10 && std::abs(ev[1]) < 1e-10 &&
                                std::abs(ev[2]) < 1e-10 && ev[3] > 1e-3;
    const bool exact3 = oracle::same_partition(r3.assignments, truth3);

    std::ostringstream d;
    d << "4-block ARI " << ari << ", 3-block exact " << (exact3 ? "yes" : "no") << ", zero eigenvalues "
      << (zero_structure ? "3 then gap" : "missing");
    return {ari == 1.0 && exact3 && zero_structure, d.str()};
}

Outcome criterion_gzsl() {
    // 1-D prototypes: seen 10 -> 0, 11 -> 4; unseen 20 -> 2, 21 -> 8
    const EmbeddingSpace protos = make_space("image", (Matrix(1, 4) << 0.0, 4.0, 2.0, 8.0).finished(), {10, 11, 20, 21});
    Matrix x(10, 1);
    x << 0.2, 1.4, 3.9, 2.6, 2.4, 0.9, 5.5, 7.6, 9.0, 3.3;
    const std::vector<int> y{10, 10, 11, 11, 20, 20, 20, 21, 21, 21};
    //   sample   0    1    2    3    4    5    6    7    8    9
    //   all     10   20   11   20   20   10   11   21   21   11
    //   seen    10   10   11   11
    //   unseen                      20   20   21   21   21   20
    // s->s 4/4, s->tau 2/4, u->u 4/6, u->tau 3/6
    const Dataset test = make_dataset(x, y, {10, 11}, {20, 21}, DatasetRole::test);
    const int ks[] = {1};
    const EvalReport r = evaluate(test, protos, Protocol::gzsl, ks);
    const bool exact = *r.s_to_s == 4.0 / 4.0 && *r.s_to_tau == 2.0 / 4.0 && *r.u_to_u == 4.0 / 6.0 &&
                       *r.u_to_tau == 3.0 / 6.0;

    // ordering on random runs
    std::mt19937_64 rng(808);
    int runs = 0, violations = 0;
    for (int t = 0; t < 200; ++t) {
        const Index d = 3, k = 6, n = 40;
        const Matrix p = oracle::random_matrix(d, k, rng);
        const EmbeddingSpace sp = make_space("image", p, {1, 2, 3, 4, 5, 6});
        Matrix samples = oracle::random_matrix(n, d, rng, 1.2);
        std::vector<int> labels(n);
        for (Index i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(i % k) + 1;
            samples.row(i) += p.col(i % k).transpose();
        }
        const Dataset ds = make_dataset(samples, labels, {1, 2, 3}, {4, 5, 6}, DatasetRole::test);
        for (bool per_class : {false, true}) {
            EvalOptions eo;
            eo.per_class_mean = per_class;
            const EvalReport e = evaluate(ds, sp, Protocol::gzsl, ks, eo);
            ++runs;
            violations += *e.u_to_tau > *e.u_to_u || *e.s_to_tau > *e.s_to_s;
        }
    }
    std::ostringstream d;
    d << "hand fixture s->s " << *r.s_to_s << " s->tau " << *r.s_to_tau << " u->u " << *r.u_to_u << " u->tau "
      << *r.u_to_tau << ", ordering violations " << violations << "/" << runs;
    return {exact && violations == 0, d.str()};
}

Outcome criterion_determinism() {
    oracle::TempDir dir("accept_det");
    const auto base = dir.path;
    const Config gen = Config::parse("output_dir = data\nseed = 9\nnoise_sigma = 0.02\nnuisance_classes = 2\n", base);
    cli::cmd_gen(gen, {});
    const std::string fit_text =
        "train_features = data/train_features.csv\ntrain_labels = data/train_labels.txt\nsplit = data/split.txt\n"
        "classes = data/classes.txt\nsemantic = data/semantic.csv\nlambda = 0.05\ngamma = 0.2\n"
        "locality = log_distance\nseed = 9\n";
    std::string bytes[3];
    const int threads[3] = {1, 1, 4};
    for (int i = 0; i < 3; ++i) {
        const Config cfg = Config::parse(fit_text + "output_dir = run" + std::to_string(i) + "\n", base);
        cli::Overrides o;
        o.threads = threads[i];
        std::streambuf* old = std::cout.rdbuf(nullptr);
        cli::cmd_fit(cfg, o);
        std::cout.rdbuf(old);
        bytes[i] = io::read_text(base / ("run" + std::to_string(i)) / "model.json");
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    std::ostringstream d;
    d << "model.json " << bytes[0].size() << " bytes, repeat identical " << (same ? "yes" : "no")
      << ", 4-thread run identical " << (bytes[0] == bytes[2] ? "yes" : "no");
    return {same && bytes[0] == bytes[2], d.str()};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"1 lasso optimality", criterion_lasso},
        {"2 f-step exactness", criterion_f_step},
        {"3 alternating descent", criterion_descent},
        {"4 planted recovery", criterion_planted},
        {"5 space-shift sensitivity", criterion_shift},
        {"6 sparsity ablation direction", criterion_sparsity},
        {"7 spectral clustering", criterion_clustering},
        {"8 gzsl metric arithmetic", criterion_gzsl},
        {"9 determinism", criterion_determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %-30s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}

// Serial reference vs OpenMP kernels on synthetic workloads.
#include "srg/classifier.hpp"
#include "srg/clustering.hpp"
#include "srg/srg_learner.hpp"
#include "srg/synthetic.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

using namespace srg;

namespace {

double seconds(const std::function<void()>& f, int reps) {
    f();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) {
        f();
    }
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void report(const char* name, double serial, double parallel, bool same) {
    std::printf("%-14s serial %9.4f s  parallel %9.4f s  speedup %5.2fx  %s\n", name, serial, parallel,
                serial / parallel, same ? "identical" : "MISMATCH");
    std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
    std::printf("threads: %d\n", threads);
    std::fflush(stdout);

    SyntheticSpec spec;
    spec.k_seen = 60;
    spec.k_unseen = 10;
    spec.dim_semantic = 48;
    spec.dim_image = 96;
    spec.noise_sigma = 0.05;
    spec.samples_per_class = 2;
    spec.test_samples_per_class = 100;
    spec.seed = 1;
    const SyntheticData data = generate(spec);

    Hyperparams hp;
    hp.lambda = 0.1;
    hp.gamma = 0.3;
    const Matrix& e = data.semantic.prototypes;
    const Matrix& f = data.truth.image_prototypes;
    const LocalityWeights w = build_locality(e, Locality::log_distance);
    AStepOptions ao;
    ao.threads = threads;
    Matrix a_serial, a_parallel;
    const double as = seconds([&] { a_serial = a_step_serial(e, f, w, hp).coefficients; }, 3);
    const double ap = seconds([&] { a_parallel = a_step_detailed(e, f, w, hp, ao).coefficients; }, 3);
    report("a_step", as, ap, a_serial == a_parallel);

    const EmbeddingSpace protos = make_space("image", f, data.semantic.class_ids);
    std::vector<std::vector<int>> r_serial, r_parallel;
    const double rs = seconds([&] { r_serial = rank_nearest_serial(data.test.features, protos, 5); }, 5);
    const double rp = seconds([&] { r_parallel = rank_nearest(data.test.features, protos, 5, threads); }, 5);
    report("rank_nearest", rs, rp, r_serial == r_parallel);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix pts(2000, 12);
    for (Index i = 0; i < pts.size(); ++i) {
        pts.data()[i] = n(rng) + static_cast<double>((i % pts.rows()) % 8);
    }
    KMeansOptions ko;
    ko.restarts = 16;
    ko.threads = threads;
    KMeansResult k_serial, k_parallel;
    const double ks = seconds([&] { k_serial = kmeans_serial(pts, 8, 3, ko); }, 2);
    const double kp = seconds([&] { k_parallel = kmeans(pts, 8, 3, ko); }, 2);
    report("kmeans", ks, kp, k_serial.assignments == k_parallel.assignments && k_serial.inertia == k_parallel.inertia);
    return 0;
}

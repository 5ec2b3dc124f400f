#pragma once

#include "srg/data_model.hpp"

#include <cstdint>
#include <vector>

namespace srg {

/// Recipe for a planted-truth dataset.
///
/// Structured classes are grouped into clusters of `cluster_size` members
/// (default sparsity + 1). A cluster of g members spans an r-dimensional
/// subspace, r = min(sparsity, g - 1), and satisfies g - r linear relations
/// V w = 0 whose weights are uniform on [0.2, 1] with random signs. Each
/// member's planted alpha column rebuilds it from r other members, chosen at
/// random; with g = sparsity + 1 that choice is forced and the planted support
/// is the unique sparse one. Clusters occupy mutually orthogonal subspaces
/// when the dimensions allow. At most one unseen class is placed per cluster.
///
/// `shift` blends each cluster's image-space relation weights with an
/// independent draw: w_img = (1 - shift) w + shift w'.
struct SyntheticSpec {
    Index k_seen = 12;
    Index k_unseen = 3;
    Index dim_image = 24;
    Index dim_semantic = 16;
    Index sparsity = 3;       // max nonzeros per planted alpha column
    Index cluster_size = 0;   // members per cluster, 0 = sparsity + 1
    double noise_sigma = 0.0; // perturbation norm per prototype, relative to `scale`
    double shift = 0.0;       // 0 = identical relations in both spaces, 1 = independent
    Index samples_per_class = 20;       // training samples per seen class
    Index test_samples_per_class = 50;  // test samples per unseen class
    Index seen_test_samples_per_class = 0;
    double sample_sigma = 1.0;  // per-coordinate std of the sample clouds
    Index nuisance_classes = 0; // extra seen classes with random prototypes of norm `scale`
    double scale = 30.0;        // prototype magnitude
    std::uint64_t seed = 0;
};

void validate(const SyntheticSpec& spec);

/// Number of planted clusters the recipe produces for `spec`.
Index planted_cluster_count(const SyntheticSpec& spec);

struct GroundTruth {
    Matrix coefficients;        // A* in the semantic space, canonical order
    Matrix image_coefficients;  // image-space relations (differs from A* when shift > 0)
    Matrix image_prototypes;    // F*, d x K, noise included
    Matrix unseen_prototypes;   // F_u*, d x K_u
    std::vector<int> cluster_of;  // planted cluster per class index, -1 for nuisance classes
};

struct SyntheticData {
    Dataset train;
    Dataset test;
    EmbeddingSpace semantic;
    GroundTruth truth;
};

/// Bit-deterministic for a fixed spec. Seen-class training clouds and test
/// clouds are centered so their sample means equal the prototypes exactly.
/// Throws ConditioningFailure if no draw keeps the unseen block of (I - A*)
/// below condition 1e6.
SyntheticData generate(const SyntheticSpec& spec);

struct ShiftRow {
    int class_a = 0;
    int class_b = 0;
    double distance_a = 0.0;  // normalized by the max pairwise distance in space a
    double distance_b = 0.0;
};

struct ShiftReport {
    std::vector<ShiftRow> rows;
    double rank_correlation = 0.0;  // Spearman, average ranks for ties
};

/// Side-by-side normalized pairwise class distances of two spaces with the same class order.
ShiftReport space_shift_report(const EmbeddingSpace& space_a, const EmbeddingSpace& space_b);

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace srg

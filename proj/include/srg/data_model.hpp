#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace srg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Labelled samples plus the seen/unseen class split.
///
/// `features` holds one sample per row. Class lists are kept sorted ascending
/// (see `make_dataset`), which fixes the canonical class order used by every
/// matrix in the library: seen classes first, then unseen.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<int> seen_classes;
    std::vector<int> unseen_classes;

    [[nodiscard]] Index num_samples() const { return features.rows(); }
    [[nodiscard]] Index dim() const { return features.cols(); }
};

enum class DatasetRole {
    training,  // unseen classes must have no samples; every seen class needs one
    test,      // any class of the split may appear
};

/// Sorts the class lists and validates the dataset for the given role.
Dataset make_dataset(Matrix features, std::vector<int> labels, std::vector<int> seen, std::vector<int> unseen,
                     DatasetRole role = DatasetRole::training);

/// Throws a ValidationError subtype if any dataset invariant is violated.
void validate(const Dataset& dataset, DatasetRole role);

/// Seen classes followed by unseen classes.
std::vector<int> canonical_order(const Dataset& dataset);
std::vector<int> canonical_order(std::vector<int> seen, std::vector<int> unseen);

/// Per-class vectors in one space, one column per class.
struct EmbeddingSpace {
    std::string name;
    Matrix prototypes;          // dims x classes
    std::vector<int> class_ids; // column order

    [[nodiscard]] Index dim() const { return prototypes.rows(); }
    [[nodiscard]] Index num_classes() const { return prototypes.cols(); }
    /// Column index of `class_id`, or nullopt.
    [[nodiscard]] std::optional<Index> column_of(int class_id) const;
};

EmbeddingSpace make_space(std::string name, Matrix prototypes, std::vector<int> class_ids);

/// Columns of `space` for the given ids, in the given order.
EmbeddingSpace restrict_to(const EmbeddingSpace& space, std::span<const int> class_ids);

/// Image-space prototypes split into the seen block and the unseen block.
struct PrototypePartition {
    Matrix seen;    // d x K_s
    Matrix unseen;  // d x 0 until synthesized

    [[nodiscard]] Matrix full() const;
};

/// Seen-class prototypes as per-class feature means.
PrototypePartition compute_prototypes(const Dataset& dataset);

/// Normalizes each space's columns to unit length and stacks the spaces vertically.
EmbeddingSpace fuse_embeddings(std::span<const EmbeddingSpace> spaces, std::string name = "fused");

/// Either a fraction in (0, 1] or an absolute count >= 1 of rows to keep per seen class.
struct SubsampleRule {
    std::optional<double> fraction;
    std::optional<Index> count;

    static SubsampleRule keep_fraction(double f) { return {f, std::nullopt}; }
    static SubsampleRule keep_count(Index n) { return {std::nullopt, n}; }
};

/// Keeps a seeded uniform subset of each seen class's rows (original row order kept).
/// Rows of other classes pass through untouched.
Dataset subsample_per_class(const Dataset& dataset, const SubsampleRule& rule, std::uint64_t seed);

/// True when every entry is finite.
bool all_finite(const Eigen::Ref<const Matrix>& m);

}  // namespace srg

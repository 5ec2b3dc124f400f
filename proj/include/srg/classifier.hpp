#pragma once

#include "srg/data_model.hpp"

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace srg {

/// Nearest prototype by squared Euclidean distance; ties go to the smallest class id.
int classify(const Eigen::Ref<const Vector>& instance, const EmbeddingSpace& candidates);

/// As above, restricted to `candidate_ids`.
int classify(const Eigen::Ref<const Vector>& instance, const EmbeddingSpace& prototypes,
             std::span<const int> candidate_ids);

/// Generalized setting: every class of `all_prototypes` is a candidate.
int classify_gzsl(const Eigen::Ref<const Vector>& instance, const EmbeddingSpace& all_prototypes);

/// The `depth` nearest candidate ids for every row of `instances`, closest first,
/// ordered by (squared distance, class id). Parallel over rows.
std::vector<std::vector<int>> rank_nearest(const Matrix& instances, const EmbeddingSpace& candidates, Index depth,
                                           int threads = 0);

/// Single-threaded reference for `rank_nearest`.
std::vector<std::vector<int>> rank_nearest_serial(const Matrix& instances, const EmbeddingSpace& candidates,
                                                  Index depth);

enum class Protocol { zsl, gzsl };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

struct EvalOptions {
    /// Average accuracy over classes instead of over samples.
    bool per_class_mean = false;
    int threads = 0;
};

struct EvalReport {
    Protocol protocol = Protocol::zsl;
    bool per_class_mean = false;
    std::optional<double> u_to_u;    // unseen samples, unseen candidates
    std::optional<double> s_to_s;    // seen samples, seen candidates
    std::optional<double> u_to_tau;  // unseen samples, all candidates
    std::optional<double> s_to_tau;  // seen samples, all candidates
    /// zsl: unseen samples among unseen candidates; gzsl: all samples among all candidates.
    std::map<int, double> top_k;
    /// Top-1 accuracy per true class under the protocol's full candidate set.
    std::map<int, double> per_class_accuracy;
    Index num_unseen_samples = 0;
    Index num_seen_samples = 0;
};

/// Scores `test` against `prototypes` under the chosen protocol.
/// zsl uses only unseen-class samples and fills u_to_u and top_k.
/// Throws MissingPrototype if a class of the split has no prototype column.
EvalReport evaluate(const Dataset& test, const EmbeddingSpace& prototypes, Protocol protocol,
                    std::span<const int> ks, const EvalOptions& options = {});

}  // namespace srg

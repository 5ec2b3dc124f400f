#pragma once

#include "srg/classifier.hpp"
#include "srg/clustering.hpp"
#include "srg/cv_tuner.hpp"
#include "srg/data_model.hpp"
#include "srg/srg_learner.hpp"
#include "srg/synthetic.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace srg::io {

namespace fs = std::filesystem;

// Matrix files are CSV with a leading header line "# rows=<N> cols=<d>",
// one row per line, values in shortest round-trip decimal form.
std::string format_matrix(const Matrix& m);
Matrix parse_matrix(const std::string& text, const std::string& origin = "<memory>");
Matrix read_matrix(const fs::path& path);

// Label files: one integer class id per line. Blank lines and '#' comments are skipped.
std::string format_labels(const std::vector<int>& labels);
std::vector<int> read_labels(const fs::path& path);

struct Split {
    std::vector<int> seen;
    std::vector<int> unseen;
};

// Split files: a "[seen]" section and an "[unseen]" section, ids separated by whitespace.
std::string format_split(const Split& split);
Split parse_split(const std::string& text, const std::string& origin = "<memory>");
Split read_split(const fs::path& path);

struct ManifestEntry {
    int id = 0;
    std::string name;
};

// Class manifests: "<id> [name]" per line, in canonical class order.
std::string format_manifest(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const fs::path& path);
std::vector<int> manifest_ids(const std::vector<ManifestEntry>& entries);

/// Embedding file (one row per class) checked against a manifest.
EmbeddingSpace read_embedding(const fs::path& matrix_path, const std::vector<ManifestEntry>& manifest,
                              std::string name);

Dataset read_dataset(const fs::path& features, const fs::path& labels, const Split& split, DatasetRole role);

/// Writes through a temporary file and renames, so readers never see partial output.
void write_text(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SrgModel& model);
SrgModel model_from_json(const nlohmann::json& j);
std::string format_model(const SrgModel& model);
SrgModel read_model(const fs::path& path);

std::string format_loss_trace(const SrgModel& model);

nlohmann::json to_json(const EvalReport& report);
std::string format_eval_table(const EvalReport& report);

nlohmann::json to_json(const ClusterResult& result, const std::vector<int>& class_ids,
                       const std::map<int, std::string>& names);
std::string format_cluster_table(const ClusterResult& result, const std::vector<int>& class_ids,
                                 const std::map<int, std::string>& names);

std::string format_score_csv(const TuneResult& result);
nlohmann::json to_json(const TuneResult& result);

nlohmann::json to_json(const ShiftReport& report);
std::string format_shift_table(const ShiftReport& report);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace srg::io

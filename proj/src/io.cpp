#include "srg/io.hpp"

#include "srg/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace srg::io {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view token, const std::string& origin, std::size_t line) {
    const std::string t = trim(token);
    double v = 0.0;
    const auto* first = t.data();
    const auto* last = t.data() + t.size();
    if (!t.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || t.empty()) {
        throw ValidationError(origin + ":" + std::to_string(line) + ": bad number '" + t + "'");
    }
    if (!std::isfinite(v)) {
        throw ValidationError(origin + ":" + std::to_string(line) + ": non-finite value");
    }
    return v;
}

int parse_int(std::string_view token, const std::string& origin, std::size_t line) {
    const std::string t = trim(token);
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ValidationError(origin + ":" + std::to_string(line) + ": bad integer '" + t + "'");
    }
    return v;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        out.push_back(line);
    }
    return out;
}

std::string percent(const std::optional<double>& v) {
    if (!v) {
        return "-";
    }
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * *v;
    return s.str();
}

json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string format_matrix(const Matrix& m) {
    std::string out = "# rows=" + std::to_string(m.rows()) + " cols=" + std::to_string(m.cols()) + "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out += ',';
            }
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

Matrix parse_matrix(const std::string& text, const std::string& origin) {
    const auto lines = lines_of(text);
    if (lines.empty()) {
        throw ValidationError(origin + ": empty matrix file");
    }
    long rows = -1;
    long cols = -1;
    {
        std::istringstream head(lines.front());
        std::string hash;
        std::string r;
        std::string c;
        head >> hash >> r >> c;
        if (hash != "#" || r.rfind("rows=", 0) != 0 || c.rfind("cols=", 0) != 0) {
            throw ValidationError(origin + ":1: expected header '# rows=<N> cols=<d>'");
        }
        rows = parse_int(r.substr(5), origin, 1);
        cols = parse_int(c.substr(5), origin, 1);
        if (rows < 0 || cols < 0) {
            throw ValidationError(origin + ":1: negative dimensions");
        }
    }
    Matrix m(rows, cols);
    long r = 0;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const std::string line = trim(lines[ln]);
        if (line.empty()) {
            continue;
        }
        if (r >= rows) {
            throw DimensionMismatch(origin + ":" + std::to_string(ln + 1) + ": more rows than the header's " +
                                    std::to_string(rows));
        }
        long c = 0;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            const auto token = std::string_view(line).substr(pos, comma == std::string::npos ? std::string::npos
                                                                                             : comma - pos);
            if (c >= cols) {
                throw DimensionMismatch(origin + ":" + std::to_string(ln + 1) + ": more columns than the header's " +
                                        std::to_string(cols));
            }
            m(r, c++) = parse_double(token, origin, ln + 1);
            if (comma == std::string::npos) {
                break;
            }
            pos = comma + 1;
        }
        if (c != cols) {
            throw DimensionMismatch(origin + ":" + std::to_string(ln + 1) + ": expected " + std::to_string(cols) +
                                    " columns, found " + std::to_string(c));
        }
        ++r;
    }
    if (r != rows) {
        throw DimensionMismatch(origin + ": header says " + std::to_string(rows) + " rows, found " +
                                std::to_string(r));
    }
    return m;
}

Matrix read_matrix(const fs::path& path) {
    return parse_matrix(read_text(path), path.string());
}

std::string format_labels(const std::vector<int>& labels) {
    std::string out;
    for (int l : labels) {
        out += std::to_string(l);
        out += '\n';
    }
    return out;
}

std::vector<int> read_labels(const fs::path& path) {
    const auto lines = lines_of(read_text(path));
    std::vector<int> labels;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        labels.push_back(parse_int(line, path.string(), i + 1));
    }
    return labels;
}

std::string format_split(const Split& split) {
    std::string out = "[seen]\n";
    for (int s : split.seen) {
        out += std::to_string(s) + "\n";
    }
    out += "[unseen]\n";
    for (int u : split.unseen) {
        out += std::to_string(u) + "\n";
    }
    return out;
}

Split parse_split(const std::string& text, const std::string& origin) {
    Split split;
    std::vector<int>* section = nullptr;
    bool saw_seen = false;
    bool saw_unseen = false;
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (line == "[seen]") {
            section = &split.seen;
            saw_seen = true;
            continue;
        }
        if (line == "[unseen]") {
            section = &split.unseen;
            saw_unseen = true;
            continue;
        }
        if (section == nullptr) {
            throw ValidationError(origin + ":" + std::to_string(i + 1) + ": class id outside a section");
        }
        std::istringstream tokens(line);
        std::string tok;
        while (tokens >> tok) {
            section->push_back(parse_int(tok, origin, i + 1));
        }
    }
    if (!saw_seen || !saw_unseen) {
        throw ValidationError(origin + ": split file needs both [seen] and [unseen] sections");
    }
    return split;
}

Split read_split(const fs::path& path) {
    return parse_split(read_text(path), path.string());
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += std::to_string(e.id);
        if (!e.name.empty()) {
            out += ' ';
            out += e.name;
        }
        out += '\n';
    }
    return out;
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    const auto lines = lines_of(read_text(path));
    std::vector<ManifestEntry> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto space = line.find_first_of(" \t");
        ManifestEntry e;
        e.id = parse_int(line.substr(0, space), path.string(), i + 1);
        if (space != std::string::npos) {
            e.name = trim(line.substr(space));
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<int> manifest_ids(const std::vector<ManifestEntry>& entries) {
    std::vector<int> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) {
        ids.push_back(e.id);
    }
    return ids;
}

EmbeddingSpace read_embedding(const fs::path& matrix_path, const std::vector<ManifestEntry>& manifest,
                              std::string name) {
    const Matrix rows = read_matrix(matrix_path);
    if (rows.rows() != static_cast<Index>(manifest.size())) {
        throw ManifestMismatch(matrix_path.string() + ": " + std::to_string(rows.rows()) +
                               " embedding rows but the manifest lists " + std::to_string(manifest.size()) +
                               " classes");
    }
    return make_space(std::move(name), rows.transpose(), manifest_ids(manifest));
}

Dataset read_dataset(const fs::path& features, const fs::path& labels, const Split& split, DatasetRole role) {
    return make_dataset(read_matrix(features), read_labels(labels), split.seen, split.unseen, role);
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot open " + tmp.string() + " for writing");
        }
        out << content;
        if (!out) {
            throw Error("write to " + tmp.string() + " failed");
        }
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json matrix_to_json(const Matrix& m) {
    json data = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            data.push_back(m(i, j));
        }
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
        throw ValidationError("matrix JSON has inconsistent shape");
    }
    Matrix m(rows, cols);
    std::size_t idx = 0;
    for (Index i = 0; i < rows; ++i) {
        for (Index c = 0; c < cols; ++c) {
            m(i, c) = data[idx++].get<double>();
        }
    }
    return m;
}

json to_json(const Hyperparams& hp) {
    return json{{"lambda", hp.lambda},
                {"gamma", hp.gamma},
                {"outer_tol", hp.outer_tol},
                {"max_outer_iter", hp.max_outer_iter},
                {"lasso_tol", hp.lasso_tol},
                {"lasso_max_iter", hp.lasso_max_iter},
                {"locality", std::string(to_string(hp.locality))}};
}

Hyperparams hyperparams_from_json(const json& j) {
    Hyperparams hp;
    hp.lambda = j.at("lambda").get<double>();
    hp.gamma = j.at("gamma").get<double>();
    hp.outer_tol = j.at("outer_tol").get<double>();
    hp.max_outer_iter = j.at("max_outer_iter").get<Index>();
    hp.lasso_tol = j.at("lasso_tol").get<double>();
    hp.lasso_max_iter = j.at("lasso_max_iter").get<Index>();
    hp.locality = parse_locality(j.at("locality").get<std::string>());
    return hp;
}

json to_json(const SrgModel& model) {
    return json{{"format", "srg-model"},
                {"version", 1},
                {"class_order", model.class_order},
                {"num_seen", model.num_seen},
                {"hyperparams", to_json(model.hyperparams)},
                {"coefficients", matrix_to_json(model.coefficients)},
                {"seen_prototypes", matrix_to_json(model.seen_prototypes)},
                {"synthesized_unseen", matrix_to_json(model.synthesized_unseen)},
                {"loss_trace", model.loss_trace},
                {"converged", model.converged},
                {"normalized_features", model.normalized_features}};
}

SrgModel model_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "srg-model" || j.at("version").get<int>() != 1) {
            throw ValidationError("not a version-1 srg-model document");
        }
        SrgModel m;
        m.class_order = j.at("class_order").get<std::vector<int>>();
        m.num_seen = j.at("num_seen").get<Index>();
        m.hyperparams = hyperparams_from_json(j.at("hyperparams"));
        m.coefficients = matrix_from_json(j.at("coefficients"));
        m.seen_prototypes = matrix_from_json(j.at("seen_prototypes"));
        m.synthesized_unseen = matrix_from_json(j.at("synthesized_unseen"));
        m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
        m.converged = j.at("converged").get<bool>();
        m.normalized_features = j.value("normalized_features", false);
        const auto k = static_cast<Index>(m.class_order.size());
        if (m.coefficients.rows() != k || m.coefficients.cols() != k || m.seen_prototypes.cols() != m.num_seen ||
            m.synthesized_unseen.cols() != k - m.num_seen ||
            m.synthesized_unseen.rows() != m.seen_prototypes.rows()) {
            throw ValidationError("model matrices disagree with the class manifest");
        }
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed model file: ") + e.what());
    }
}

std::string format_model(const SrgModel& model) {
    return to_json(model).dump(2) + "\n";
}

SrgModel read_model(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

std::string format_loss_trace(const SrgModel& model) {
    std::string out = "iteration,objective\n";
    for (std::size_t i = 0; i < model.loss_trace.size(); ++i) {
        out += std::to_string(i + 1) + "," + format_double(model.loss_trace[i]) + "\n";
    }
    return out;
}

json to_json(const EvalReport& report) {
    json top = json::object();
    for (const auto& [k, v] : report.top_k) {
        top[std::to_string(k)] = v;
    }
    json per_class = json::object();
    for (const auto& [c, v] : report.per_class_accuracy) {
        per_class[std::to_string(c)] = v;
    }
    return json{{"protocol", std::string(to_string(report.protocol))},
                {"averaging", report.per_class_mean ? "per_class" : "per_sample"},
                {"u_to_u", optional_json(report.u_to_u)},
                {"s_to_s", optional_json(report.s_to_s)},
                {"u_to_tau", optional_json(report.u_to_tau)},
                {"s_to_tau", optional_json(report.s_to_tau)},
                {"top_k", top},
                {"per_class_accuracy", per_class},
                {"num_unseen_samples", report.num_unseen_samples},
                {"num_seen_samples", report.num_seen_samples}};
}

std::string format_eval_table(const EvalReport& report) {
    std::ostringstream out;
    out << "protocol: " << to_string(report.protocol) << " ("
        << (report.per_class_mean ? "per-class mean" : "per-sample mean") << ")\n";
    out << std::left << std::setw(12) << "metric" << std::right << std::setw(10) << "acc (%)" << "\n";
    auto row = [&](const std::string& name, const std::optional<double>& v) {
        out << std::left << std::setw(12) << name << std::right << std::setw(10) << percent(v) << "\n";
    };
    row("u->u", report.u_to_u);
    if (report.protocol == Protocol::gzsl) {
        row("s->s", report.s_to_s);
        row("u->T", report.u_to_tau);
        row("s->T", report.s_to_tau);
    }
    for (const auto& [k, v] : report.top_k) {
        row("top-" + std::to_string(k), v);
    }
    return out.str();
}

json to_json(const ClusterResult& result, const std::vector<int>& class_ids, const std::map<int, std::string>& names) {
    json clusters = json::array();
    for (Index c = 0; c < result.n_clusters; ++c) {
        json members = json::array();
        for (std::size_t i = 0; i < result.assignments.size(); ++i) {
            if (result.assignments[i] == c) {
                const int id = class_ids[i];
                auto it = names.find(id);
                members.push_back(json{{"id", id}, {"name", it == names.end() ? "" : it->second}});
            }
        }
        clusters.push_back(json{{"cluster", c}, {"classes", members}});
    }
    return json{{"n_clusters", result.n_clusters},
                {"clusters", clusters},
                {"eigenvalues", result.eigengap_trace},
                {"eigengap_suggestion", eigengap_suggestion(result.eigengap_trace)},
                {"inertia", result.inertia}};
}

std::string format_cluster_table(const ClusterResult& result, const std::vector<int>& class_ids,
                                 const std::map<int, std::string>& names) {
    std::ostringstream out;
    out << std::left << std::setw(8) << "cluster" << "classes\n";
    for (Index c = 0; c < result.n_clusters; ++c) {
        out << std::left << std::setw(8) << c;
        bool first = true;
        for (std::size_t i = 0; i < result.assignments.size(); ++i) {
            if (result.assignments[i] != c) {
                continue;
            }
            const int id = class_ids[i];
            auto it = names.find(id);
            out << (first ? "" : ", ") << (it == names.end() || it->second.empty() ? std::to_string(id) : it->second);
            first = false;
        }
        out << "\n";
    }
    out << "smallest Laplacian eigenvalues:";
    for (double v : result.eigengap_trace) {
        out << ' ' << std::scientific << std::setprecision(3) << v;
    }
    out << "\n";
    return out.str();
}

std::string format_score_csv(const TuneResult& result) {
    std::string out = "lambda,gamma,fold,accuracy\n";
    for (const auto& p : result.table) {
        for (std::size_t f = 0; f < p.fold_accuracy.size(); ++f) {
            out += format_double(p.lambda) + "," + format_double(p.gamma) + "," + std::to_string(f) + "," +
                   format_double(p.fold_accuracy[f]) + "\n";
        }
    }
    return out;
}

json to_json(const TuneResult& result) {
    json table = json::array();
    for (const auto& p : result.table) {
        table.push_back(json{{"lambda", p.lambda},
                             {"gamma", p.gamma},
                             {"fold_accuracy", p.fold_accuracy},
                             {"mean_accuracy", p.mean_accuracy}});
    }
    return json{{"best_lambda", result.best_lambda},
                {"best_gamma", result.best_gamma},
                {"best_score", result.best_score},
                {"folds", result.folds},
                {"table", table}};
}

json to_json(const ShiftReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back(json{{"class_a", r.class_a},
                            {"class_b", r.class_b},
                            {"distance_a", r.distance_a},
                            {"distance_b", r.distance_b}});
    }
    return json{{"pairs", rows},
                {"rank_correlation", std::isfinite(report.rank_correlation) ? json(report.rank_correlation)
                                                                             : json(nullptr)}};
}

std::string format_shift_table(const ShiftReport& report) {
    std::ostringstream out;
    out << std::right << std::setw(8) << "class_a" << std::setw(8) << "class_b" << std::setw(12) << "dist_a"
        << std::setw(12) << "dist_b" << "\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& r : report.rows) {
        out << std::setw(8) << r.class_a << std::setw(8) << r.class_b << std::setw(12) << r.distance_a
            << std::setw(12) << r.distance_b << "\n";
    }
    out << "rank correlation: " << report.rank_correlation << "\n";
    return out.str();
}

}  // namespace srg::io

#include "commands.hpp"

#include "srg/classifier.hpp"
#include "srg/clustering.hpp"
#include "srg/cv_tuner.hpp"
#include "srg/errors.hpp"
#include "srg/io.hpp"
#include "srg/srg_learner.hpp"
#include "srg/synthetic.hpp"

#include <iostream>
#include <map>

namespace srg::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kCommon{"output_dir", "seed", "threads"};

std::set<std::string> keys(std::initializer_list<std::string> extra) {
    std::set<std::string> out = kCommon;
    out.insert(extra.begin(), extra.end());
    return out;
}

const std::set<std::string> kHyperKeys{"lambda",        "gamma",     "outer_tol", "max_outer_iter",
                                       "lasso_tol",     "lasso_max_iter", "locality"};

int threads_of(const Config& cfg, const Overrides& o) {
    const auto t = o.threads ? *o.threads : static_cast<int>(cfg.get_int("threads", 0));
    if (t < 0) {
        throw ValidationError("threads must be >= 0");
    }
    return t;
}

std::uint64_t seed_of(const Config& cfg, const Overrides& o) {
    return o.seed ? *o.seed : cfg.get_seed("seed", 0);
}

Hyperparams hyperparams_of(const Config& cfg) {
    Hyperparams hp;
    hp.lambda = cfg.get_double("lambda", hp.lambda);
    hp.gamma = cfg.get_double("gamma", hp.gamma);
    hp.outer_tol = cfg.get_double("outer_tol", hp.outer_tol);
    hp.max_outer_iter = cfg.get_int("max_outer_iter", hp.max_outer_iter);
    hp.lasso_tol = cfg.get_double("lasso_tol", hp.lasso_tol);
    hp.lasso_max_iter = cfg.get_int("lasso_max_iter", hp.lasso_max_iter);
    hp.locality = parse_locality(cfg.get_string("locality", std::string(to_string(hp.locality))));
    validate(hp);
    return hp;
}

void require_files(const Config& cfg, std::initializer_list<const char*> names) {
    for (const char* name : names) {
        if (!cfg.has(name)) {
            continue;
        }
        for (const auto& p : cfg.get_paths(name)) {
            if (!fs::is_regular_file(p)) {
                throw ValidationError(std::string(name) + ": file not found: " + p.string());
            }
        }
    }
}

void normalize_rows(Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        const double n = m.row(i).norm();
        if (n > 0.0) {
            m.row(i) /= n;
        }
    }
}

struct Semantic {
    EmbeddingSpace space;
    std::vector<io::ManifestEntry> manifest;
};

/// Reads the manifest and embedding files, checking the order against the split.
Semantic load_semantic(const Config& cfg, const std::vector<int>& expected_order) {
    Semantic s;
    s.manifest = io::read_manifest(cfg.get_path("classes"));
    if (io::manifest_ids(s.manifest) != expected_order) {
        throw ManifestMismatch("class manifest does not list the split's classes in canonical order "
                               "(seen ascending, then unseen ascending)");
    }
    std::vector<EmbeddingSpace> spaces;
    for (const auto& p : cfg.get_paths("semantic")) {
        spaces.push_back(io::read_embedding(p, s.manifest, p.stem().string()));
    }
    s.space = spaces.size() == 1 ? std::move(spaces.front()) : fuse_embeddings(spaces, "fused");
    return s;
}

std::map<int, std::string> names_of(const std::vector<io::ManifestEntry>& manifest) {
    std::map<int, std::string> names;
    for (const auto& e : manifest) {
        names[e.id] = e.name;
    }
    return names;
}

}  // namespace

int cmd_gen(const Config& cfg, const Overrides& o) {
    cfg.require_known(keys({"k_seen", "k_unseen", "dim_image", "dim_semantic", "sparsity", "cluster_size", "noise_sigma", "shift",
                            "samples_per_class", "test_samples_per_class", "seen_test_samples_per_class",
                            "sample_sigma", "nuisance_classes", "scale"}));
    SyntheticSpec spec;
    spec.k_seen = cfg.get_int("k_seen", spec.k_seen);
    spec.k_unseen = cfg.get_int("k_unseen", spec.k_unseen);
    spec.dim_image = cfg.get_int("dim_image", spec.dim_image);
    spec.dim_semantic = cfg.get_int("dim_semantic", spec.dim_semantic);
    spec.sparsity = cfg.get_int("sparsity", spec.sparsity);
    spec.cluster_size = cfg.get_int("cluster_size", spec.cluster_size);
    spec.noise_sigma = cfg.get_double("noise_sigma", spec.noise_sigma);
    spec.shift = cfg.get_double("shift", spec.shift);
    spec.samples_per_class = cfg.get_int("samples_per_class", spec.samples_per_class);
    spec.test_samples_per_class = cfg.get_int("test_samples_per_class", spec.test_samples_per_class);
    spec.seen_test_samples_per_class = cfg.get_int("seen_test_samples_per_class", spec.seen_test_samples_per_class);
    spec.sample_sigma = cfg.get_double("sample_sigma", spec.sample_sigma);
    spec.nuisance_classes = cfg.get_int("nuisance_classes", spec.nuisance_classes);
    spec.scale = cfg.get_double("scale", spec.scale);
    spec.seed = seed_of(cfg, o);
    const fs::path out = cfg.get_path("output_dir");

    const SyntheticData data = generate(spec);

    std::vector<io::ManifestEntry> manifest;
    for (int id : data.semantic.class_ids) {
        manifest.push_back({id, "class_" + std::to_string(id)});
    }
    nlohmann::json truth{{"coefficients", io::matrix_to_json(data.truth.coefficients)},
                         {"image_coefficients", io::matrix_to_json(data.truth.image_coefficients)},
                         {"unseen_prototypes", io::matrix_to_json(data.truth.unseen_prototypes)},
                         {"cluster_of", data.truth.cluster_of},
                         {"class_order", data.semantic.class_ids}};

    io::write_text(out / "train_features.csv", io::format_matrix(data.train.features));
    io::write_text(out / "train_labels.txt", io::format_labels(data.train.labels));
    io::write_text(out / "test_features.csv", io::format_matrix(data.test.features));
    io::write_text(out / "test_labels.txt", io::format_labels(data.test.labels));
    io::write_text(out / "split.txt", io::format_split({data.train.seen_classes, data.train.unseen_classes}));
    io::write_text(out / "classes.txt", io::format_manifest(manifest));
    io::write_text(out / "semantic.csv", io::format_matrix(data.semantic.prototypes.transpose()));
    io::write_text(out / "image_truth.csv", io::format_matrix(data.truth.image_prototypes.transpose()));
    io::write_text(out / "ground_truth.json", truth.dump(2) + "\n");

    std::cout << "wrote synthetic dataset to " << out.string() << " (" << data.train.seen_classes.size()
              << " seen, " << data.train.unseen_classes.size() << " unseen classes, " << data.train.num_samples()
              << " training and " << data.test.num_samples() << " test samples)\n";
    return kOk;
}

int cmd_fit(const Config& cfg, const Overrides& o) {
    auto allowed = keys({"train_features", "train_labels", "split", "classes", "semantic", "normalize_image",
                         "subsample_fraction", "subsample_count"});
    allowed.insert(kHyperKeys.begin(), kHyperKeys.end());
    cfg.require_known(allowed);
    require_files(cfg, {"train_features", "train_labels", "split", "classes", "semantic"});

    const Hyperparams hp = hyperparams_of(cfg);
    const int threads = threads_of(cfg, o);
    const fs::path out = cfg.get_path("output_dir");
    const bool normalize = cfg.get_bool("normalize_image", false);

    const io::Split split = io::read_split(cfg.get_path("split"));
    Dataset train = io::read_dataset(cfg.get_path("train_features"), cfg.get_path("train_labels"), split,
                                     DatasetRole::training);
    const Semantic semantic = load_semantic(cfg, canonical_order(train));
    if (cfg.has("subsample_fraction") && cfg.has("subsample_count")) {
        throw ValidationError("set at most one of subsample_fraction and subsample_count");
    }
    if (cfg.has("subsample_fraction")) {
        train = subsample_per_class(train, SubsampleRule::keep_fraction(cfg.get_double("subsample_fraction")),
                                    seed_of(cfg, o));
    } else if (cfg.has("subsample_count")) {
        train = subsample_per_class(train, SubsampleRule::keep_count(cfg.get_int("subsample_count")),
                                    seed_of(cfg, o));
    }
    if (normalize) {
        normalize_rows(train.features);
    }

    if (hp.locality == Locality::log_distance) {
        for (const auto& [i, j] : build_locality(semantic.space, hp.locality).duplicate_pairs) {
            std::cerr << "warning: classes " << semantic.space.class_ids[static_cast<std::size_t>(i)] << " and "
                      << semantic.space.class_ids[static_cast<std::size_t>(j)]
                      << " share an embedding; locality penalty clamped\n";
        }
    }

    const PrototypePartition protos = compute_prototypes(train);
    FitOptions fo;
    fo.threads = threads;
    SrgModel model = fit(semantic.space, protos.seen, hp, fo);
    model.normalized_features = normalize;

    io::write_text(out / "model.json", io::format_model(model));
    io::write_text(out / "loss_trace.csv", io::format_loss_trace(model));

    std::cout << "fit: " << model.loss_trace.size() << " outer iterations, final objective "
              << io::format_double(model.loss_trace.back()) << (model.converged ? "" : " (not converged)") << "\n";
    return model.converged ? kOk : kNotConverged;
}

int cmd_eval(const Config& cfg, const Overrides& o) {
    cfg.require_known(keys({"test_features", "test_labels", "split", "model", "protocol", "top_k", "per_class_mean"}));
    require_files(cfg, {"test_features", "test_labels", "split", "model"});

    const int threads = threads_of(cfg, o);
    const fs::path out = cfg.get_path("output_dir");
    const Protocol protocol = parse_protocol(cfg.get_string("protocol", "zsl"));
    const std::vector<int> ks = cfg.has("top_k") ? cfg.get_ints("top_k") : std::vector<int>{1, 5};

    const io::Split split = io::read_split(cfg.get_path("split"));
    Dataset test = io::read_dataset(cfg.get_path("test_features"), cfg.get_path("test_labels"), split,
                                    DatasetRole::test);
    const SrgModel model = io::read_model(cfg.get_path("model"));
    if (model.class_order != canonical_order(test)) {
        throw ManifestMismatch("model class order does not match the split");
    }
    if (model.seen_prototypes.rows() != test.dim()) {
        throw DimensionMismatch("test features have " + std::to_string(test.dim()) + " dims, model prototypes have " +
                                std::to_string(model.seen_prototypes.rows()));
    }
    if (model.normalized_features) {
        normalize_rows(test.features);
    }

    EvalOptions eo;
    eo.per_class_mean = cfg.get_bool("per_class_mean", false);
    eo.threads = threads;
    const EvalReport report = evaluate(test, model.image_space(), protocol, ks, eo);

    const std::string table = io::format_eval_table(report);
    io::write_text(out / "eval.json", io::to_json(report).dump(2) + "\n");
    io::write_text(out / "eval.txt", table);
    std::cout << table;
    return kOk;
}

int cmd_cluster(const Config& cfg, const Overrides& o) {
    cfg.require_known(keys({"model", "n_clusters", "classes", "laplacian", "restarts"}));
    require_files(cfg, {"model", "classes"});

    const fs::path out = cfg.get_path("output_dir");
    const SrgModel model = io::read_model(cfg.get_path("model"));
    std::map<int, std::string> names;
    if (cfg.has("classes")) {
        const auto manifest = io::read_manifest(cfg.get_path("classes"));
        if (io::manifest_ids(manifest) != model.class_order) {
            throw ManifestMismatch("class manifest does not match the model's class order");
        }
        names = names_of(manifest);
    }
    SpectralOptions so;
    const std::string kind = cfg.get_string("laplacian", "unnormalized");
    if (kind == "unnormalized") {
        so.laplacian = LaplacianKind::unnormalized;
    } else if (kind == "symmetric") {
        so.laplacian = LaplacianKind::symmetric;
    } else {
        throw ValidationError("laplacian must be 'unnormalized' or 'symmetric'");
    }
    so.kmeans.restarts = cfg.get_int("restarts", so.kmeans.restarts);
    so.kmeans.threads = threads_of(cfg, o);
    const Index n = cfg.get_int("n_clusters");

    const Matrix affinity = balance_graph(model.coefficients);
    const ClusterResult result = spectral_cluster(affinity, n, seed_of(cfg, o), so);

    const std::string table = io::format_cluster_table(result, model.class_order, names);
    io::write_text(out / "clusters.json", io::to_json(result, model.class_order, names).dump(2) + "\n");
    io::write_text(out / "clusters.txt", table);
    std::cout << table;
    return kOk;
}

int cmd_tune(const Config& cfg, const Overrides& o) {
    auto allowed =
        keys({"train_features", "train_labels", "split", "classes", "semantic", "lambda_grid", "gamma_grid", "n_folds"});
    allowed.insert(kHyperKeys.begin(), kHyperKeys.end());
    cfg.require_known(allowed);
    require_files(cfg, {"train_features", "train_labels", "split", "classes", "semantic"});

    GridSpec grid = GridSpec::defaults();
    if (cfg.has("lambda_grid")) {
        grid.lambda_grid = cfg.get_doubles("lambda_grid");
    }
    if (cfg.has("gamma_grid")) {
        grid.gamma_grid = cfg.get_doubles("gamma_grid");
    }
    grid.n_folds = cfg.get_int("n_folds", grid.n_folds);
    grid.seed = seed_of(cfg, o);
    validate(grid);
    const Hyperparams base = hyperparams_of(cfg);
    const fs::path out = cfg.get_path("output_dir");

    const io::Split split = io::read_split(cfg.get_path("split"));
    const Dataset train = io::read_dataset(cfg.get_path("train_features"), cfg.get_path("train_labels"), split,
                                           DatasetRole::training);
    const Semantic semantic = load_semantic(cfg, canonical_order(train));

    TuneOptions to;
    to.threads = threads_of(cfg, o);
    const TuneResult result = grid_search(train, semantic.space, grid, base, to);

    io::write_text(out / "best_params.conf", "lambda = " + io::format_double(result.best_lambda) + "\ngamma = " +
                                                 io::format_double(result.best_gamma) + "\n");
    io::write_text(out / "scores.csv", io::format_score_csv(result));
    io::write_text(out / "tune.json", io::to_json(result).dump(2) + "\n");
    std::cout << "best lambda " << io::format_double(result.best_lambda) << ", gamma "
              << io::format_double(result.best_gamma) << ", mean fold accuracy "
              << io::format_double(result.best_score) << "\n";
    return kOk;
}

int cmd_shift_report(const Config& cfg, const Overrides& o) {
    (void)o;
    cfg.require_known(keys({"classes", "semantic", "image", "model"}));
    require_files(cfg, {"classes", "semantic", "image", "model"});
    if (cfg.has("image") == cfg.has("model")) {
        throw ValidationError("set exactly one of 'image' or 'model'");
    }
    const fs::path out = cfg.get_path("output_dir");
    const auto manifest = io::read_manifest(cfg.get_path("classes"));
    const auto ids = io::manifest_ids(manifest);
    const Semantic semantic = load_semantic(cfg, ids);

    EmbeddingSpace image;
    if (cfg.has("image")) {
        image = io::read_embedding(cfg.get_path("image"), manifest, "image");
    } else {
        const SrgModel model = io::read_model(cfg.get_path("model"));
        if (model.class_order != ids) {
            throw ManifestMismatch("class manifest does not match the model's class order");
        }
        image = model.image_space();
    }
    const ShiftReport report = space_shift_report(semantic.space, image);
    const std::string table = io::format_shift_table(report);
    io::write_text(out / "shift.json", io::to_json(report).dump(2) + "\n");
    io::write_text(out / "shift.txt", table);
    std::cout << table;
    return kOk;
}

int run(const std::string& command, const std::string& config_path, const Overrides& o) {
    try {
        const Config cfg = Config::load(config_path);
        if (command == "gen") {
            return cmd_gen(cfg, o);
        }
        if (command == "fit") {
            return cmd_fit(cfg, o);
        }
        if (command == "eval") {
            return cmd_eval(cfg, o);
        }
        if (command == "cluster") {
            return cmd_cluster(cfg, o);
        }
        if (command == "tune") {
            return cmd_tune(cfg, o);
        }
        if (command == "shift-report") {
            return cmd_shift_report(cfg, o);
        }
        std::cerr << "error: unknown command '" << command << "'\n";
        return kInvalidInput;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const NotConverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNotConverged;
    } catch (const SingularBlock& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const EigenFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const ConditioningFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const GridPointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace srg::cli

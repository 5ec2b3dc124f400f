#include "oracles.hpp"
#include "srg/errors.hpp"
#include "srg/config.hpp"
#include "srg/io.hpp"

#include <doctest.h>

#include <cstring>

using namespace srg;
namespace fs = std::filesystem;

TEST_CASE("config parsing") {
    const Config c = Config::parse(
        "# comment\n"
        "lambda = 0.5\n"
        "\n"
        "  iters=12  # trailing\n"
        "grid = 0.1, 1, 10\n"
        "ids = 3,4 , 5\n"
        "flag = true\n"
        "out = results/model.json\n",
        "/data/run");
    CHECK(c.get_double("lambda") == 0.5);
    CHECK(c.get_int("iters") == 12);
    CHECK(c.get_doubles("grid") == std::vector<double>{0.1, 1.0, 10.0});
    CHECK(c.get_ints("ids") == std::vector<int>{3, 4, 5});
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_bool("other", false) == false);
    CHECK(c.get_double("missing", 2.5) == 2.5);
    CHECK(c.get_path("out") == fs::path("/data/run/results/model.json"));
    CHECK(c.get_seed("iters", 0) == 12);
    CHECK_THROWS_AS(static_cast<void>(c.get_string("missing")), ValidationError);
    CHECK_THROWS_AS(static_cast<void>(c.get_int("lambda")), ValidationError);
    CHECK_NOTHROW(c.require_known({"lambda", "iters", "grid", "ids", "flag", "out"}));
    CHECK_THROWS_AS(c.require_known({"lambda"}), ValidationError);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(Config::parse("no equals sign\n"), ValidationError);
    CHECK_THROWS_AS(Config::parse("= 3\n"), ValidationError);
    CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), ValidationError);
    CHECK_THROWS_AS(static_cast<void>(Config::parse("x = nan\n").get_double("x")), ValidationError);
    CHECK_THROWS_AS(static_cast<void>(Config::parse("x = -3\n").get_seed("x", 0)), ValidationError);
    CHECK_THROWS_AS(static_cast<void>(Config::parse("x = maybe\n").get_bool("x", true)), ValidationError);
    CHECK_THROWS_AS(Config::load("/nonexistent/dir/run.conf"), ValidationError);
}

TEST_CASE("absolute paths are kept") {
    const Config c = Config::parse("a = /abs/x.csv, rel.csv\n", "/base");
    CHECK(c.get_paths("a") == std::vector<fs::path>{"/abs/x.csv", "/base/rel.csv"});
}

TEST_CASE("matrix text round trip is bit exact") {
    std::mt19937_64 rng(101);
    Matrix m = oracle::random_matrix(7, 5, rng, 1e3);
    m(0, 0) = 0.1;
    m(1, 1) = -0.0;
    m(2, 2) = 5e-324;
    m(3, 3) = 1.7976931348623157e308;
    const Matrix r = io::parse_matrix(io::format_matrix(m));
    REQUIRE(r.rows() == 7);
    REQUIRE(r.cols() == 5);
    CHECK(std::memcmp(r.data(), m.data(), sizeof(double) * 35) == 0);
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::parse_matrix(io::format_matrix(Matrix(0, 3))).cols() == 3);
}

TEST_CASE("malformed matrices") {
    CHECK_THROWS_AS(io::parse_matrix(""), ValidationError);
    CHECK_THROWS_AS(io::parse_matrix("1,2\n"), ValidationError);
    CHECK_THROWS_AS(io::parse_matrix("# rows=2 cols=2\n1,2\n"), DimensionMismatch);
    CHECK_THROWS_AS(io::parse_matrix("# rows=1 cols=2\n1,2,3\n"), DimensionMismatch);
    CHECK_THROWS_AS(io::parse_matrix("# rows=1 cols=2\n1,x\n"), ValidationError);
    CHECK_THROWS_AS(io::parse_matrix("# rows=1 cols=2\n1,inf\n"), ValidationError);
    CHECK_THROWS_AS(io::parse_matrix("# rows=1 cols=1\n1\n2\n"), DimensionMismatch);
}

TEST_CASE("split and manifest files") {
    const io::Split s = io::parse_split("[seen]\n4 2\n9\n[unseen]\n7 1\n");
    CHECK(s.seen == std::vector<int>{4, 2, 9});
    CHECK(s.unseen == std::vector<int>{7, 1});
    const io::Split back = io::parse_split(io::format_split(s));
    CHECK(back.seen == s.seen);
    CHECK(back.unseen == s.unseen);
    CHECK_THROWS_AS(io::parse_split("3\n[seen]\n1\n[unseen]\n2\n"), ValidationError);
    CHECK_THROWS_AS(io::parse_split("[seen]\n1\n"), ValidationError);

    oracle::TempDir dir("io");
    io::write_text(dir.path / "classes.txt", io::format_manifest({{3, "cat"}, {1, "dog"}, {8, ""}}));
    const auto man = io::read_manifest(dir.path / "classes.txt");
    CHECK(io::manifest_ids(man) == std::vector<int>{3, 1, 8});
    CHECK(man[1].name == "dog");

    io::write_text(dir.path / "sem.csv", io::format_matrix(Matrix::Identity(3, 2)));
    const EmbeddingSpace e = io::read_embedding(dir.path / "sem.csv", man, "attr");
    CHECK(e.class_ids == std::vector<int>{3, 1, 8});
    CHECK(e.dim() == 2);
    CHECK(e.prototypes(1, 1) == 1.0);
    io::write_text(dir.path / "short.csv", io::format_matrix(Matrix::Identity(2, 2)));
    CHECK_THROWS_AS(io::read_embedding(dir.path / "short.csv", man, "attr"), ManifestMismatch);
}

TEST_CASE("labels and datasets") {
    oracle::TempDir dir("ds");
    io::write_text(dir.path / "x.csv", io::format_matrix((Matrix(3, 2) << 1, 2, 3, 4, 5, 6).finished()));
    io::write_text(dir.path / "y.txt", "# labels\n5\n\n2\n5\n");
    CHECK(io::read_labels(dir.path / "y.txt") == std::vector<int>{5, 2, 5});
    const Dataset d = io::read_dataset(dir.path / "x.csv", dir.path / "y.txt", {{5, 2}, {9}}, DatasetRole::training);
    CHECK(d.seen_classes == std::vector<int>{2, 5});
    CHECK(d.num_samples() == 3);
    io::write_text(dir.path / "bad.txt", "5\ntwo\n5\n");
    CHECK_THROWS_AS(io::read_labels(dir.path / "bad.txt"), ValidationError);
    CHECK_THROWS_AS(io::read_text(dir.path / "absent.txt"), ValidationError);
}

TEST_CASE("model json round trip") {
    std::mt19937_64 rng(102);
    SrgModel m;
    m.coefficients = oracle::random_matrix(4, 4, rng);
    m.coefficients.diagonal().setZero();
    m.seen_prototypes = oracle::random_matrix(3, 3, rng);
    m.synthesized_unseen = oracle::random_matrix(3, 1, rng);
    m.loss_trace = {3.0, 2.5, 2.4999999999};
    m.converged = true;
    m.class_order = {4, 7, 9, 2};
    m.num_seen = 3;
    m.hyperparams.lambda = 0.3;
    m.hyperparams.locality = Locality::log_distance;
    m.normalized_features = true;
    const std::string text = io::format_model(m);
    const SrgModel r = io::model_from_json(nlohmann::json::parse(text));
    CHECK(r.coefficients == m.coefficients);
    CHECK(r.seen_prototypes == m.seen_prototypes);
    CHECK(r.synthesized_unseen == m.synthesized_unseen);
    CHECK(r.loss_trace == m.loss_trace);
    CHECK(r.class_order == m.class_order);
    CHECK(r.num_seen == 3);
    CHECK(r.converged);
    CHECK(r.normalized_features);
    CHECK(r.hyperparams.lambda == 0.3);
    CHECK(r.hyperparams.locality == Locality::log_distance);
    CHECK(io::format_model(r) == text);

    nlohmann::json j = nlohmann::json::parse(text);
    j["class_order"] = {4, 7, 9};
    CHECK_THROWS_AS(io::model_from_json(j), ValidationError);
    CHECK_THROWS_AS(io::model_from_json(nlohmann::json::object()), ValidationError);
    oracle::TempDir dir("model");
    io::write_text(dir.path / "m.json", "{ not json");
    CHECK_THROWS_AS(io::read_model(dir.path / "m.json"), ValidationError);
}

TEST_CASE("write_text replaces atomically") {
    oracle::TempDir dir("w");
    io::write_text(dir.path / "a.txt", "one");
    io::write_text(dir.path / "a.txt", "two");
    CHECK(io::read_text(dir.path / "a.txt") == "two");
    int files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++files;
    CHECK(files == 1);
}

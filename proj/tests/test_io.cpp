#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "hgnn/io.hpp"
#include "test_util.hpp"

using namespace hgnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hgnn_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("partition files round trip") {
    TempDir dir;
    std::vector<std::string> ids = {"a", "b", "c", "d"};

    SUBCASE("discrete short form") {
        Partition p = Partition::discrete({0, 1, 0, 2}, 3);
        write_partition_file(p, ids, dir.file("p.json"));
        std::vector<std::string> back_ids;
        Partition q = read_partition_file(dir.file("p.json"), &back_ids);
        CHECK(back_ids == ids);
        CHECK(q.kind() == PartitionKind::discrete);
        CHECK(q.groups() == p.groups());
        CHECK(q.coarse_count() == 3);
    }
    SUBCASE("probabilistic long form") {
        Matrix c(4, 2);
        c(0, 0) = 0.25;
        c(0, 1) = 0.75;
        c(1, 0) = 1.0;
        c(2, 1) = 1.0;
        c(3, 0) = 0.5;
        c(3, 1) = 0.5;
        Partition p = Partition::probabilistic(c);
        write_partition_file(p, ids, dir.file("p.json"));
        Partition q = read_partition_file(dir.file("p.json"));
        CHECK(q.kind() == PartitionKind::probabilistic);
        const Matrix got = q.matrix().to_dense();
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 2; ++j) CHECK(got(i, j) == doctest::Approx(c(i, j)));
    }
    SUBCASE("writes are byte-deterministic") {
        Partition p = Partition::discrete({0, 1, 0, 2}, 3);
        write_partition_file(p, ids, dir.file("p1.json"));
        write_partition_file(p, ids, dir.file("p2.json"));
        CHECK(slurp(dir.file("p1.json")) == slurp(dir.file("p2.json")));
    }
    SUBCASE("label count mismatch rejected") {
        Partition p = Partition::discrete({0, 1}, 2);
        CHECK_THROWS_AS(write_partition_file(p, ids, dir.file("p.json")), ValidationError);
    }
}

TEST_CASE("embedding files round trip") {
    TempDir dir;
    Graph g = testutil::random_graph(5, 0.5, 140);
    EmbeddingResult e = svd_embedding(g, 2);
    write_embedding_files(e, g.node_ids(), 4.0, dir.file("e.tsv"), dir.file("e.json"));

    std::vector<std::string> ids;
    EmbeddingResult back = read_embedding_file(dir.file("e.tsv"), &ids);
    CHECK(ids == g.node_ids());
    REQUIRE(back.dim() == 2);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(back.l(i, j) == e.l(i, j));  // exact: shortest round-trip formatting
            CHECK(back.r(i, j) == e.r(i, j));
        }
    const std::string meta = slurp(dir.file("e.json"));
    CHECK(meta.find("gaussian_fixed_sigma") != std::string::npos);
    CHECK(meta.find("effective_dimensionality") != std::string::npos);

    CHECK_THROWS_AS(read_embedding_file(dir.file("missing.tsv")), IoError);
}

TEST_CASE("feature state export tags layers") {
    TempDir dir;
    Graph g = testutil::random_graph(4, 0.6, 141);
    LayerStack stack = LayerStack::build(g, default_node_weights(g),
                                         {Partition::discrete({0, 0, 1, 1}, 2)},
                                         InterLayerScheme::Averaging);
    FeatureState s;
    s.x.push_back(testutil::random_matrix(4, 2, 142));
    s.x.push_back(testutil::random_matrix(2, 2, 143));
    write_feature_state(s, stack, dir.file("f.tsv"));
    const std::string text = slurp(dir.file("f.tsv"));
    CHECK(text.find("0\t") == 0);
    CHECK(text.find("1\tc0\t") != std::string::npos);
}

TEST_CASE("checkpoint json") {
    TempDir dir;
    ModelParams p;
    p.act.steps.push_back({identity_activation(2, 0, 0)});
    p.init_features.push_back(testutil::random_matrix(3, 2, 144));
    PropagationConfig cfg;
    TrainConfig tcfg;
    TrainReport report;
    report.trace = {1.0, 0.5};
    report.final_objective = 0.5;
    report.wall_time_ms = 12.5;

    write_checkpoint(p, cfg, tcfg, report, dir.file("c1.json"), false);
    write_checkpoint(p, cfg, tcfg, report, dir.file("c2.json"), false);
    const std::string c1 = slurp(dir.file("c1.json"));
    CHECK(c1 == slurp(dir.file("c2.json")));
    CHECK(c1.find("wall_time_ms") == std::string::npos);  // timing excluded by default
    CHECK(c1.find("activation_steps") != std::string::npos);
    CHECK(c1.find("final_objective") != std::string::npos);

    write_checkpoint(p, cfg, tcfg, report, dir.file("c3.json"), true);
    CHECK(slurp(dir.file("c3.json")).find("wall_time_ms") != std::string::npos);
}

TEST_CASE("number formatting and hashing are stable") {
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(-2.25) == "-2.25");
    const double v = 1.0 / 3.0;
    CHECK(std::stod(format_number(v)) == v);  // shortest round-trip
    CHECK(fnv1a("abc") == fnv1a("abc"));
    CHECK(fnv1a("abc") != fnv1a("abd"));
}

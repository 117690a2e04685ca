// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// criteria pass. Criterion 9 shells out to the hgnn CLI binary.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "hgnn/harness.hpp"
#include "hgnn/io.hpp"
#include "hgnn/reference.hpp"
#include "hgnn/synthetic.hpp"
#include "test_util.hpp"

using namespace hgnn;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << "criterion " << index << " [" << name << "]: " << (ok ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!ok) ++g_failures;
}

// --- 1: conservation of edge and node weight under aggregation ---
void criterion_conservation() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const std::size_t n = 4 + s % 29;  // up to 32
        Graph g = testutil::random_graph(n, 0.3 + 0.02 * (s % 10), 10000 + s);
        const std::size_t groups = 2 + s % std::min<std::size_t>(n - 1, 5);
        Partition p = testutil::random_partition(n, groups, s % 2 == 0, 20000 + s);

        const Graph coarse = aggregate_graph(g, p);
        worst = std::max(worst, std::abs(coarse.total_weight() - g.total_weight()) /
                                    std::max(1.0, g.total_weight()));

        const NodeWeights v = default_node_weights(g);
        const NodeWeights cv = aggregate_weights(v, p);
        const double fine = std::accumulate(v.v.begin(), v.v.end(), 0.0);
        const double agg = std::accumulate(cv.v.begin(), cv.v.end(), 0.0);
        worst = std::max(worst, std::abs(agg - fine) / std::max(1.0, fine));
    }
    std::ostringstream d;
    d << "200 cases, worst relative error " << worst;
    report(1, "conservation", worst <= 1e-10, d.str());
}

// --- 2: inter-layer scheme invariants ---
void criterion_schemes() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const std::size_t n = 4 + s % 13;
        const std::size_t groups = 2 + s % 4;
        if (groups >= n) continue;
        Graph g = testutil::random_graph(n, 0.4, 30000 + s);
        const NodeWeights v = default_node_weights(g);
        Partition p = testutil::random_partition(n, groups, s % 2 == 0, 40000 + s);

        auto [up_a, down_a] = interlayer_ops(p, v, InterLayerScheme::Averaging);
        for (double c : up_a.col_sums()) worst = std::max(worst, std::abs(c - 1.0));
        for (double c : down_a.col_sums()) worst = std::max(worst, std::abs(c - 1.0));
        // Constants map to constants in both directions.
        for (double x : up_a.transposed().apply_vec(std::vector<double>(n, 1.0)))
            worst = std::max(worst, std::abs(x - 1.0));
        for (double x : down_a.transposed().apply_vec(std::vector<double>(groups, 1.0)))
            worst = std::max(worst, std::abs(x - 1.0));

        auto [up_b, down_b] = interlayer_ops(p, v, InterLayerScheme::Additive);
        for (double r : up_b.row_sums()) worst = std::max(worst, std::abs(r - 1.0));
        for (double r : down_b.row_sums()) worst = std::max(worst, std::abs(r - 1.0));
        std::vector<double> feat(n);
        for (std::size_t i = 0; i < n; ++i) feat[i] = 0.3 + 0.05 * static_cast<double>(i);
        const double total = std::accumulate(feat.begin(), feat.end(), 0.0);
        const std::vector<double> up_feat = up_b.transposed().apply_vec(feat);
        worst = std::max(worst, std::abs(std::accumulate(up_feat.begin(), up_feat.end(), 0.0) -
                                         total) /
                                    std::max(1.0, total));
        const std::vector<double> down_feat = down_b.transposed().apply_vec(up_feat);
        worst = std::max(worst, std::abs(std::accumulate(down_feat.begin(), down_feat.end(), 0.0) -
                                         total) /
                                    std::max(1.0, total));
    }
    std::ostringstream d;
    d << "200 cases, worst deviation " << worst;
    report(2, "scheme invariants", worst <= 1e-12, d.str());
}

// --- 3: modularity search vs exhaustive enumeration ---
void criterion_modularity() {
    bool ok = true;
    double worst_gap = 0.0;
    ModularityOptions opt;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const std::size_t n = 3 + s % 6;  // up to 8
        Graph g = testutil::random_graph(n, 0.35 + 0.03 * (s % 8), 50000 + s);
        opt.seed = s;
        const double got = modularity(g, infer_partition_modularity(g, opt));
        const double best = testutil::best_modularity_exhaustive(g);
        worst_gap = std::max(worst_gap, best - got);
        if (best - got > 1e-9) ok = false;
    }
    // Pinned exact values.
    Graph clique = testutil::random_graph(5, 1.0, 1);
    if (modularity(clique, Partition::discrete({0, 0, 0, 0, 0}, 1)) != 0.0) ok = false;
    Graph dyads = Graph::from_edges({"a", "b", "c", "d"},
                                    {{0, 1, 1.0}, {1, 0, 1.0}, {2, 3, 1.0}, {3, 2, 1.0}});
    if (modularity(dyads, Partition::discrete({0, 0, 1, 1}, 2)) != 0.5) ok = false;
    std::ostringstream d;
    d << "50 graphs, worst optimality gap " << worst_gap;
    report(3, "modularity oracle", ok, d.str());
}

// --- 4: one-layer step equals an independent flat convolution ---
void criterion_flat_reduction() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const std::size_t n = 4 + s % 10;
        const std::size_t d = 2 + s % 3;
        Graph g = testutil::random_graph(n, 0.5, 60000 + s);
        LayerStack stack =
            LayerStack::build(g, default_node_weights(g), {}, InterLayerScheme::Averaging);
        PropagationConfig cfg;
        const PreparedStack ps = prepare(stack, cfg);

        ActivationParams p = identity_activation(d, 0, 0);
        p.phi = s % 2 == 0 ? Nonlinearity::tanh_fn : Nonlinearity::sigmoid_fn;
        p.w_self = testutil::random_matrix(d, d, 70000 + s, 0.6);
        p.w_nbr = testutil::random_matrix(d, d, 80000 + s, 0.6);
        for (std::size_t j = 0; j < d; ++j) p.bias[j] = 0.02 * static_cast<double>(j) - 0.01;

        FeatureState state;
        state.x.push_back(testutil::random_matrix(n, d, 90000 + s));
        const FeatureState next = hgnn_step(state, ps, {p});
        const Matrix oracle = testutil::flat_conv_step(g, state.x[0], p);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j)
                worst = std::max(worst, std::abs(next.x[0](i, j) - oracle(i, j)));
    }
    std::ostringstream d;
    d << "50 instances, worst abs deviation " << worst;
    report(4, "flat reduction", worst <= 1e-12, d.str());
}

// --- 5: reverse-mode vs central finite differences ---
void criterion_gradients() {
    Graph g = testutil::random_graph(6, 0.5, 61, /*binary=*/true);
    LayerStack stack = LayerStack::build(g, default_node_weights(g),
                                         {Partition::discrete({0, 0, 1, 1, 2, 2}, 3)},
                                         InterLayerScheme::Averaging);
    double worst = 0.0;
    for (std::size_t iters = 1; iters <= 3; ++iters) {
        ModelParams base;
        std::vector<ActivationParams> layer;
        for (std::size_t h = 0; h < 2; ++h) {
            ActivationParams a = identity_activation(2, h > 0 ? 2 : 0, h == 0 ? 2 : 0);
            a.phi = Nonlinearity::tanh_fn;
            a.w_self = testutil::random_matrix(2, 2, 200 + 7 * h + iters, 0.4);
            a.w_nbr = testutil::random_matrix(2, 2, 300 + 7 * h + iters, 0.4);
            if (h > 0) a.w_down = testutil::random_matrix(2, 2, 400 + iters, 0.4);
            if (h == 0) a.w_up = testutil::random_matrix(2, 2, 500 + iters, 0.4);
            layer.push_back(std::move(a));
        }
        base.act.steps.push_back(layer);
        base.init_features.push_back(testutil::random_matrix(6, 2, 600 + iters, 0.5));
        base.init_features.push_back(testutil::random_matrix(3, 2, 700 + iters, 0.5));

        PropagationConfig cfg;
        cfg.iterations = iters;
        cfg.init = FeatureInit::supplied;

        for (auto kind : {ObjectiveSpec::Kind::bernoulli_ll, ObjectiveSpec::Kind::gaussian_ll,
                          ObjectiveSpec::Kind::squared_error,
                          ObjectiveSpec::Kind::soft_modularity, ObjectiveSpec::Kind::label_bce}) {
            ModelParams p = base;
            ObjectiveSpec spec;
            spec.kind = kind;
            if (kind == ObjectiveSpec::Kind::soft_modularity ||
                kind == ObjectiveSpec::Kind::label_bce) {
                p.head.identity_transform = false;
                p.head.w = testutil::random_matrix(2, 2, 800 + iters, 0.5);
                p.head.b = {0.1, -0.1};
                p.head.phi = Nonlinearity::sigmoid_fn;
            }
            if (kind == ObjectiveSpec::Kind::label_bce) {
                spec.labels = Matrix(6, 2);
                for (std::size_t i = 0; i < 6; ++i) spec.labels(i, i % 2) = 1.0;
            }
            worst = std::max(worst,
                             gradient_check(stack, p, cfg, spec, 20, 900 + iters));
        }
    }
    std::ostringstream d;
    d << "5 objectives x I in {1,2,3}, worst relative error " << worst;
    report(5, "gradient checks", worst <= 1e-5, d.str());
}

// --- 6: truncated SVD vs dense oracle ---
void criterion_svd() {
    bool ok = true;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const std::size_t n = 3 + s % 6;  // up to 8
        Graph g = testutil::random_graph(n, 0.55, 100000 + s);
        const Matrix a = g.adjacency().to_dense();
        const testutil::DenseSvd oracle = testutil::dense_svd_jacobi(a);
        double prev = 1e300;
        for (std::size_t d = 1; d <= n; ++d) {
            const TruncatedSvd svd = truncated_svd(g.adjacency(), d);
            Matrix l(n, d), r(n, d);
            for (std::size_t k = 0; k < d; ++k)
                for (std::size_t i = 0; i < n; ++i) {
                    l(i, k) = svd.u(i, k) * svd.sigma[k];
                    r(i, k) = svd.v(i, k);
                }
            const double err = testutil::frobenius_reconstruction_error(a, l, r);
            const double want = testutil::oracle_rank_error(oracle, d);
            worst = std::max(worst, std::abs(err - want));
            if (std::abs(err - want) > 1e-8) ok = false;
            if (err > prev + 1e-10) ok = false;  // must be nonincreasing in d
            prev = err;
        }
    }
    std::ostringstream d;
    d << "n <= 8, all ranks, worst error gap " << worst;
    report(6, "svd baseline", ok, d.str());
}

// --- 7: flat vs hierarchical embedding on planted graphs ---
void criterion_compare() {
    SyntheticSpec spec;
    spec.generator = SyntheticSpec::Generator::planted_hierarchy;
    spec.levels = 2;
    spec.branching = 4;
    spec.base_block_size = 16;  // 256 nodes: 16 blocks in 4 superblocks
    spec.p_in = {0.6, 0.15};
    spec.p_out = 0.02;

    CompareVariant flat;
    flat.name = "flat";
    flat.config.pipeline = EmbedConfig::Pipeline::flat;
    flat.config.rank = 4;  // effective dimensionality 8

    CompareVariant hier;
    hier.name = "hierarchical";
    hier.config.pipeline = EmbedConfig::Pipeline::hierarchical;
    hier.config.rank = 1;
    hier.config.level_ranks = {8, 4};
    hier.config.scheme = InterLayerScheme::Additive;
    hier.config.partitions = planted_partitions(spec);

    const auto records = run_compare(spec, {flat, hier}, 20, 424242);
    const double flat_med = records[0].nmse_median;
    const double hier_med = records[1].nmse_median;
    const double flat_dim = records[0].eff_dim_median;
    const double hier_dim = records[1].eff_dim_median;
    const bool ok = hier_dim <= 0.5 * flat_dim && hier_med <= flat_med;
    std::ostringstream d;
    d << "20 paired replicas, flat nmse " << flat_med << " @ dim " << flat_dim
      << ", hierarchical nmse " << hier_med << " @ dim " << hier_dim;
    report(7, "flat vs hierarchical", ok, d.str());
}

// --- 8: soft-modularity community training on two cliques ---
void criterion_communities() {
    std::vector<Triplet> edges;
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                if (i == j) continue;
                edges.push_back({c * 4 + i, c * 4 + j, 1.0});
            }
    edges.push_back({0, 4, 1.0});
    edges.push_back({4, 0, 1.0});
    std::vector<std::string> ids(8);
    for (std::size_t i = 0; i < 8; ++i) ids[i] = "n" + std::to_string(i);
    const Graph g = Graph::from_edges(std::move(ids), std::move(edges));

    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SoftCommunityOptions opt;
        opt.seed = seed;
        const SoftCommunityResult res = train_soft_communities(g, opt);
        const auto labels = res.partition.groups();
        bool split = res.partition.coarse_count() == 2;
        for (std::size_t i = 1; i < 4 && split; ++i) split = labels[i] == labels[0];
        for (std::size_t i = 5; i < 8 && split; ++i) split = labels[i] == labels[4];
        if (split && labels[0] != labels[4]) ++hits;
    }
    std::ostringstream d;
    d << hits << "/10 seeds recover the planted split";
    report(8, "community training", hits >= 8, d.str());
}

// --- 9: CLI determinism (byte-identical artifacts on re-run) ---
struct CliFixture {
    fs::path root;
    std::string cli = HGNN_CLI_PATH;

    explicit CliFixture() {
        root = fs::temp_directory_path() / ("hgnn_accept_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~CliFixture() { fs::remove_all(root); }

    std::string path(const std::string& name) const { return (root / name).string(); }

    bool run(const std::string& args) const {
        const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    }

    void write_config(const std::string& name, const std::string& text) const {
        std::ofstream out(path(name));
        out << text;
    }

    static bool same_bytes(const fs::path& a, const fs::path& b) {
        std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
        if (!fa || !fb) return false;
        const std::string sa((std::istreambuf_iterator<char>(fa)), {});
        const std::string sb((std::istreambuf_iterator<char>(fb)), {});
        return !sa.empty() && sa == sb;
    }

    bool dirs_identical(const std::string& da, const std::string& db) const {
        std::vector<fs::path> names;
        for (const auto& e : fs::directory_iterator(da)) names.push_back(e.path().filename());
        if (names.empty()) return false;
        for (const auto& name : names)
            if (!same_bytes(fs::path(da) / name, fs::path(db) / name)) return false;
        return true;
    }
};

void criterion_determinism() {
    CliFixture fx;
    bool ok = true;
    std::string failed;

    auto twice = [&](const std::string& label, const std::string& args) {
        if (!ok) return;
        const std::string d1 = fx.path(label + "_1");
        const std::string d2 = fx.path(label + "_2");
        if (!fx.run(args + " --out " + d1) || !fx.run(args + " --out " + d2) ||
            !fx.dirs_identical(d1, d2)) {
            ok = false;
            failed = label;
        }
    };

    fx.write_config("gen.json",
                    R"({"generator":"planted_hierarchy","levels":2,"branching":2,)"
                    R"("base_block_size":4,"p_in":[0.9,0.3],"p_out":0.05})");
    twice("generate", "generate --config " + fx.path("gen.json") + " --seed 11");
    const std::string graph = fx.path("generate_1/graph.tsv");

    fx.write_config("part.json", R"({"levels":2})");
    twice("partition",
          "partition --graph " + graph + " --config " + fx.path("part.json") + " --seed 3");

    fx.write_config("embed.json",
                    R"({"pipeline":"hierarchical","rank":2,"level_ranks":[2,1],)"
                    R"("scheme":"additive"})");
    twice("embed", "embed --graph " + graph + " --config " + fx.path("embed.json") + " --seed 5");

    fx.write_config("train.json",
                    R"({"objective":"squared_error","feature_dim":2,"iterations":2,)"
                    R"("steps":25,"learning_rate":0.02})");
    twice("train", "train --graph " + graph + " --config " + fx.path("train.json") + " --seed 7");

    fx.write_config("comm.json", R"({"method":"hgnn_soft","groups":2,"steps":60})");
    twice("communities",
          "communities --graph " + graph + " --config " + fx.path("comm.json") + " --seed 9");

    fx.write_config("cmp.json",
                    R"({"synthetic":{"generator":"planted_hierarchy","levels":1,"branching":4,)"
                    R"("base_block_size":4,"p_in":[0.7],"p_out":0.05},"replicas":3,)"
                    R"("variants":[{"name":"flat","pipeline":"flat","rank":2},)"
                    R"({"name":"hier","pipeline":"hierarchical","rank":1,"level_ranks":[2]}]})");
    twice("compare", "compare --config " + fx.path("cmp.json") + " --seed 13");

    fx.write_config("eval.json",
                    std::string(R"({"embedding":")") + fx.path("embed_1/embedding.tsv") +
                        R"("})");
    twice("eval", "eval --graph " + graph + " --config " + fx.path("eval.json") + " --seed 17");

    report(9, "cli determinism", ok, ok ? "7 commands byte-identical on re-run"
                                        : "first differing command: " + failed);
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion_conservation();
    criterion_schemes();
    criterion_modularity();
    criterion_flat_reduction();
    criterion_gradients();
    criterion_svd();
    criterion_compare();
    criterion_communities();
    criterion_determinism();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED") << " in " << secs
              << " s" << std::endl;
    return g_failures == 0 ? 0 : 1;
}

// hgnn: command-line surface over the toolkit. Exit codes: 0 success,
// 2 validation error, 3 numeric failure, 4 I/O.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hgnn/harness.hpp"
#include "hgnn/io.hpp"
#include "hgnn/synthetic.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hgnn;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw ValidationError("config parse error in " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw ValidationError("config root must be a JSON object: " + path);
    return cfg;
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory: " + out);
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

std::uint64_t config_hash(const json& cfg, std::uint64_t seed) {
    return fnv1a(cfg.dump() + "#" + std::to_string(seed));
}

template <class T>
T field_or(const json& cfg, const std::string& key, const T& fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config field '" + key + "' has the wrong type");
    }
}

SyntheticSpec parse_synthetic(const json& cfg, std::uint64_t seed) {
    SyntheticSpec spec;
    const std::string gen = field_or<std::string>(cfg, "generator", "erdos_renyi");
    if (gen == "erdos_renyi")
        spec.generator = SyntheticSpec::Generator::erdos_renyi;
    else if (gen == "planted_hierarchy")
        spec.generator = SyntheticSpec::Generator::planted_hierarchy;
    else
        throw ValidationError("config field 'generator' must be erdos_renyi or planted_hierarchy");
    spec.seed = seed;
    spec.n = field_or<std::size_t>(cfg, "n", spec.n);
    spec.p = field_or<double>(cfg, "p", spec.p);
    spec.levels = field_or<int>(cfg, "levels", spec.levels);
    spec.branching = field_or<std::size_t>(cfg, "branching", spec.branching);
    spec.base_block_size = field_or<std::size_t>(cfg, "base_block_size", spec.base_block_size);
    spec.p_in = field_or<std::vector<double>>(cfg, "p_in", spec.p_in);
    spec.p_out = field_or<double>(cfg, "p_out", spec.p_out);
    if (cfg.contains("weight")) {
        const json& w = cfg.at("weight");
        const std::string kind = field_or<std::string>(w, "kind", "constant");
        if (kind == "constant")
            spec.weight.kind = WeightDistribution::Kind::constant;
        else if (kind == "uniform")
            spec.weight.kind = WeightDistribution::Kind::uniform;
        else
            throw ValidationError("config field 'weight.kind' must be constant or uniform");
        spec.weight.value = field_or<double>(w, "value", spec.weight.value);
        spec.weight.lo = field_or<double>(w, "lo", spec.weight.lo);
        spec.weight.hi = field_or<double>(w, "hi", spec.weight.hi);
    }
    spec.validate();
    return spec;
}

InterLayerScheme parse_scheme(const json& cfg) {
    const std::string s = field_or<std::string>(cfg, "scheme", "additive");
    if (s == "averaging") return InterLayerScheme::Averaging;
    if (s == "additive") return InterLayerScheme::Additive;
    throw ValidationError("config field 'scheme' must be averaging or additive");
}

EmbedConfig parse_embed(const json& cfg, std::uint64_t seed) {
    EmbedConfig ec;
    const std::string pipeline = field_or<std::string>(cfg, "pipeline", "flat");
    if (pipeline == "flat")
        ec.pipeline = EmbedConfig::Pipeline::flat;
    else if (pipeline == "hierarchical")
        ec.pipeline = EmbedConfig::Pipeline::hierarchical;
    else
        throw ValidationError("config field 'pipeline' must be flat or hierarchical");
    ec.rank = field_or<std::size_t>(cfg, "rank", ec.rank);
    ec.level_ranks = field_or<std::vector<std::size_t>>(cfg, "level_ranks", {});
    ec.scheme = parse_scheme(cfg);
    ec.fixed_sigma = field_or<double>(cfg, "fixed_sigma", ec.fixed_sigma);
    ec.seed = seed;
    for (const std::string& path :
         field_or<std::vector<std::string>>(cfg, "partitions", {}))
        ec.partitions.push_back(read_partition_file(path));
    if (ec.pipeline == EmbedConfig::Pipeline::hierarchical && ec.level_ranks.empty())
        throw ValidationError("hierarchical pipeline needs non-empty 'level_ranks'");
    if (ec.rank == 0) throw ValidationError("config field 'rank' must be >= 1");
    return ec;
}

Graph load_graph(const std::string& path) {
    if (path.empty()) throw ValidationError("a graph path is required (--graph)");
    return load_edge_list_file(path);
}

int cmd_generate(const json& cfg, std::uint64_t seed, const std::string& out) {
    const SyntheticSpec spec = parse_synthetic(cfg, seed);
    const Graph g = generate_synthetic(spec);
    ensure_out_dir(out);
    write_edge_list_file(g, out + "/graph.tsv");
    json meta = {{"command", "generate"},
                 {"config_hash", config_hash(cfg, seed)},
                 {"seed", seed},
                 {"nodes", g.size()},
                 {"edges", g.edge_count()}};
    write_json_file(meta, out + "/generate_meta.json");
    return 0;
}

int cmd_partition(const std::string& graph_path, const json& cfg, std::uint64_t seed,
                  const std::string& out) {
    const Graph g = load_graph(graph_path);
    const int levels = field_or<int>(cfg, "levels", 1);
    if (levels < 1) throw ValidationError("config field 'levels' must be >= 1");
    ModularityOptions mo;
    mo.seed = seed;
    mo.restarts = field_or<int>(cfg, "restarts", mo.restarts);
    const std::vector<Partition> parts = infer_nested_hierarchy(g, levels, mo);
    ensure_out_dir(out);
    std::vector<std::string> labels = g.node_ids();
    json meta = {{"command", "partition"},
                 {"config_hash", config_hash(cfg, seed)},
                 {"seed", seed},
                 {"levels", levels},
                 {"group_counts", json::array()}};
    for (std::size_t h = 0; h < parts.size(); ++h) {
        write_partition_file(parts[h], labels, out + "/partition_" + std::to_string(h + 1) + ".json");
        meta["group_counts"].push_back(parts[h].coarse_count());
        std::vector<std::string> coarse(parts[h].coarse_count());
        for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = "c" + std::to_string(i);
        labels = std::move(coarse);
    }
    write_json_file(meta, out + "/partition_meta.json");
    return 0;
}

int cmd_embed(const std::string& graph_path, const json& cfg, std::uint64_t seed,
              const std::string& out) {
    const Graph g = load_graph(graph_path);
    const EmbedConfig ec = parse_embed(cfg, seed);
    const EmbedOutcome outcome = run_embed_pipeline(g, ec);
    ensure_out_dir(out);
    write_embedding_files(outcome.embedding, g.node_ids(), outcome.effective_dim,
                          out + "/embedding.tsv", out + "/embedding_meta.json");
    std::vector<std::string> labels = g.node_ids();
    for (std::size_t h = 0; h < outcome.partitions.size(); ++h) {
        write_partition_file(outcome.partitions[h], labels,
                             out + "/partition_" + std::to_string(h + 1) + ".json");
        std::vector<std::string> coarse(outcome.partitions[h].coarse_count());
        for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = "c" + std::to_string(i);
        labels = std::move(coarse);
    }
    json metrics = {{"command", "embed"},
                    {"config_hash", config_hash(cfg, seed)},
                    {"seed", seed},
                    {"nmse", outcome.nmse},
                    {"effective_dimensionality", outcome.effective_dim}};
    write_json_file(metrics, out + "/metrics.json");
    return 0;
}

ObjectiveSpec::Kind parse_objective(const json& cfg) {
    const std::string s = field_or<std::string>(cfg, "objective", "squared_error");
    if (s == "squared_error") return ObjectiveSpec::Kind::squared_error;
    if (s == "bernoulli_ll") return ObjectiveSpec::Kind::bernoulli_ll;
    if (s == "gaussian_ll") return ObjectiveSpec::Kind::gaussian_ll;
    if (s == "soft_modularity") return ObjectiveSpec::Kind::soft_modularity;
    throw ValidationError(
        "config field 'objective' must be squared_error, bernoulli_ll, gaussian_ll, or "
        "soft_modularity");
}

int cmd_train(const std::string& graph_path, const json& cfg, std::uint64_t seed,
              const std::string& out) {
    const Graph g = load_graph(graph_path);
    const std::size_t d = field_or<std::size_t>(cfg, "feature_dim", 4);
    if (d == 0) throw ValidationError("config field 'feature_dim' must be >= 1");
    const int levels = field_or<int>(cfg, "levels", 0);
    if (levels < 0) throw ValidationError("config field 'levels' must be >= 0");

    std::vector<Partition> parts;
    if (levels > 0) {
        ModularityOptions mo;
        mo.seed = seed;
        parts = infer_nested_hierarchy(g, levels, mo);
    }
    const LayerStack stack =
        LayerStack::build(g, default_node_weights(g), parts, parse_scheme(cfg));
    const std::size_t n_layers = stack.layer_count();

    PropagationConfig pcfg;
    pcfg.iterations = field_or<std::size_t>(cfg, "iterations", 2);
    const std::string mode = field_or<std::string>(cfg, "mode", "recurrent");
    if (mode == "recurrent")
        pcfg.mode = PropagationMode::recurrent;
    else if (mode == "shallow")
        pcfg.mode = PropagationMode::shallow;
    else
        throw ValidationError("config field 'mode' must be recurrent or shallow");
    pcfg.init = FeatureInit::supplied;
    pcfg.seed = seed;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> small(-0.1, 0.1);
    auto make_layer_params = [&](std::size_t h) {
        ActivationParams a = identity_activation(d, h > 0 ? d : 0, h + 1 < n_layers ? d : 0);
        a.phi = Nonlinearity::tanh_fn;
        for (auto& v : a.w_self.data()) v += small(rng);
        for (auto& v : a.w_nbr.data()) v += small(rng);
        for (auto& v : a.w_down.data()) v += small(rng);
        for (auto& v : a.w_up.data()) v += small(rng);
        return a;
    };

    ModelParams params;
    const std::size_t n_sets = pcfg.mode == PropagationMode::shallow ? pcfg.iterations : 1;
    for (std::size_t s = 0; s < n_sets; ++s) {
        std::vector<ActivationParams> per_layer;
        for (std::size_t h = 0; h < n_layers; ++h) per_layer.push_back(make_layer_params(h));
        params.act.steps.push_back(std::move(per_layer));
    }
    for (std::size_t h = 0; h < n_layers; ++h) {
        Matrix feat(stack.layer(h).graph.size(), d);
        for (auto& v : feat.data()) v = small(rng);
        params.init_features.push_back(std::move(feat));
    }
    params.edge.fixed_sigma = field_or<double>(cfg, "fixed_sigma", 1.0);
    params.trainable.edge_model = field_or<bool>(cfg, "train_edge_model", false);

    ObjectiveSpec spec;
    spec.kind = parse_objective(cfg);
    if (spec.kind == ObjectiveSpec::Kind::soft_modularity) {
        params.head.identity_transform = false;
        params.head.target = HeadTarget::layer0_nodes;
        params.head.w = Matrix(d, field_or<std::size_t>(cfg, "groups", 2));
        for (auto& v : params.head.w.data()) v = small(rng);
        params.head.b.assign(params.head.w.cols(), 0.0);
        params.head.phi = Nonlinearity::sigmoid_fn;
    } else if (d % 2 != 0) {
        throw ValidationError("embedding objectives need an even 'feature_dim'");
    }

    TrainConfig tcfg;
    const std::string method = field_or<std::string>(cfg, "method", "grad");
    if (method == "grad")
        tcfg.method = TrainMethod::grad;
    else if (method == "evolution")
        tcfg.method = TrainMethod::evolution;
    else
        throw ValidationError("config field 'method' must be grad or evolution");
    tcfg.steps = field_or<std::size_t>(cfg, "steps", 200);
    tcfg.learning_rate = field_or<double>(cfg, "learning_rate", 0.05);
    tcfg.lr_decay = field_or<double>(cfg, "lr_decay", 1.0);
    tcfg.momentum = field_or<double>(cfg, "momentum", 0.0);
    tcfg.population = field_or<std::size_t>(cfg, "population", 32);
    tcfg.noise_scale = field_or<double>(cfg, "noise_scale", 0.1);
    tcfg.elite_fraction = field_or<double>(cfg, "elite_fraction", 0.25);
    tcfg.tolerance = field_or<double>(cfg, "tolerance", 0.0);
    tcfg.grad_clip = field_or<double>(cfg, "grad_clip", 10.0);
    tcfg.seed = seed;

    auto [trained, report] = train(stack, params, pcfg, spec, tcfg);
    ensure_out_dir(out);
    write_checkpoint(trained, pcfg, tcfg, report, out + "/checkpoint.json", false);
    json metrics = {{"command", "train"},
                    {"config_hash", config_hash(cfg, seed)},
                    {"seed", seed},
                    {"final_objective", report.final_objective},
                    {"converged", report.converged},
                    {"steps_run", report.trace.size()}};
    write_json_file(metrics, out + "/metrics.json");
    return 0;
}

int cmd_communities(const std::string& graph_path, const json& cfg, std::uint64_t seed,
                    const std::string& out) {
    const Graph g = load_graph(graph_path);
    const std::string method = field_or<std::string>(cfg, "method", "modularity_search");
    Partition part;
    double q = 0.0;
    if (method == "modularity_search") {
        ModularityOptions mo;
        mo.seed = seed;
        mo.restarts = field_or<int>(cfg, "restarts", mo.restarts);
        part = infer_partition_modularity(g, mo);
        q = modularity(g, part);
    } else if (method == "hgnn_soft") {
        SoftCommunityOptions opt;
        opt.groups = field_or<std::size_t>(cfg, "groups", opt.groups);
        opt.iterations = field_or<std::size_t>(cfg, "iterations", opt.iterations);
        opt.steps = field_or<std::size_t>(cfg, "steps", opt.steps);
        opt.learning_rate = field_or<double>(cfg, "learning_rate", opt.learning_rate);
        opt.seed = seed;
        SoftCommunityResult res = train_soft_communities(g, opt);
        part = res.partition;
        q = res.q;
    } else {
        throw ValidationError("config field 'method' must be modularity_search or hgnn_soft");
    }
    ensure_out_dir(out);
    write_partition_file(part, g.node_ids(), out + "/communities.json");
    json metrics = {{"command", "communities"},
                    {"config_hash", config_hash(cfg, seed)},
                    {"seed", seed},
                    {"method", method},
                    {"n_groups", part.coarse_count()},
                    {"modularity", q}};
    write_json_file(metrics, out + "/metrics.json");
    return 0;
}

int cmd_compare(const json& cfg, std::uint64_t seed, const std::string& out) {
    if (!cfg.contains("synthetic"))
        throw ValidationError("config field 'synthetic' (generator spec) is required");
    const SyntheticSpec spec = parse_synthetic(cfg.at("synthetic"), seed);
    const std::size_t replicas = field_or<std::size_t>(cfg, "replicas", 20);
    std::vector<CompareVariant> variants;
    for (const json& v : field_or<json>(cfg, "variants", json::array())) {
        CompareVariant cv;
        cv.name = field_or<std::string>(v, "name", "variant" + std::to_string(variants.size()));
        cv.config = parse_embed(v, seed);
        variants.push_back(std::move(cv));
    }
    const std::vector<CompareRecord> records = run_compare(spec, variants, replicas, seed);
    ensure_out_dir(out);
    json report = {{"command", "compare"},
                   {"config_hash", config_hash(cfg, seed)},
                   {"seed", seed},
                   {"replicas", replicas},
                   {"records", json::array()}};
    for (const CompareRecord& rec : records) {
        report["records"].push_back({{"name", rec.name},
                                     {"nmse", rec.nmses},
                                     {"effective_dimensionality", rec.eff_dims},
                                     {"nmse_min", rec.nmse_min},
                                     {"nmse_median", rec.nmse_median},
                                     {"nmse_max", rec.nmse_max},
                                     {"effective_dimensionality_median", rec.eff_dim_median}});
    }
    write_json_file(report, out + "/report.json");
    return 0;
}

int cmd_eval(const std::string& graph_path, const json& cfg, std::uint64_t seed,
             const std::string& out) {
    const Graph g = load_graph(graph_path);
    const std::string emb_path = field_or<std::string>(cfg, "embedding", "");
    if (emb_path.empty()) throw ValidationError("config field 'embedding' (TSV path) is required");
    std::vector<std::string> labels;
    EmbeddingResult e = read_embedding_file(emb_path, &labels);
    if (labels != g.node_ids())
        throw ValidationError("embedding node labels do not match the graph");
    e.model.fixed_sigma = field_or<double>(cfg, "fixed_sigma", 1.0);
    ensure_out_dir(out);
    json metrics = {{"command", "eval"},
                    {"config_hash", config_hash(cfg, seed)},
                    {"seed", seed},
                    {"nmse", nmse(g, e)},
                    {"dimension", e.dim()}};
    write_json_file(metrics, out + "/metrics.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hgnn: hierarchical graph embedding toolkit"};
    app.require_subcommand(1);

    std::string config_path, graph_path, out_dir = ".";
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub, bool needs_graph) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed, "RNG seed");
        sub->add_option("--out", out_dir, "output directory");
        if (needs_graph) sub->add_option("--graph", graph_path, "edge-list TSV input");
    };
    CLI::App* generate = app.add_subcommand("generate", "write a synthetic graph");
    CLI::App* partition = app.add_subcommand("partition", "infer a nested hierarchy");
    CLI::App* embed = app.add_subcommand("embed", "fit a flat or hierarchical embedding");
    CLI::App* train_cmd = app.add_subcommand("train", "train model parameters");
    CLI::App* communities = app.add_subcommand("communities", "detect communities");
    CLI::App* compare = app.add_subcommand("compare", "flat vs hierarchical sweep");
    CLI::App* eval = app.add_subcommand("eval", "score a stored embedding");
    add_common(generate, false);
    add_common(partition, true);
    add_common(embed, true);
    add_common(train_cmd, true);
    add_common(communities, true);
    add_common(compare, false);
    add_common(eval, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const json cfg = load_config(config_path);
        if (generate->parsed()) return cmd_generate(cfg, seed, out_dir);
        if (partition->parsed()) return cmd_partition(graph_path, cfg, seed, out_dir);
        if (embed->parsed()) return cmd_embed(graph_path, cfg, seed, out_dir);
        if (train_cmd->parsed()) return cmd_train(graph_path, cfg, seed, out_dir);
        if (communities->parsed()) return cmd_communities(graph_path, cfg, seed, out_dir);
        if (compare->parsed()) return cmd_compare(cfg, seed, out_dir);
        if (eval->parsed()) return cmd_eval(graph_path, cfg, seed, out_dir);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

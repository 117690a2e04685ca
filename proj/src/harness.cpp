#include "hgnn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <random>

namespace hgnn {

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

EmbedOutcome run_embed_pipeline(const Graph& g, const EmbedConfig& cfg) {
    EmbedOutcome out;
    SvdOptions svd_opt;
    svd_opt.seed = cfg.seed + 7;
    if (cfg.pipeline == EmbedConfig::Pipeline::flat) {
        out.embedding = svd_embedding(g, cfg.rank, svd_opt);
        out.embedding.model.fixed_sigma = cfg.fixed_sigma;
        out.effective_dim = 2.0 * static_cast<double>(cfg.rank);
        out.nmse = nmse(g, out.embedding);
        return out;
    }
    out.partitions = cfg.partitions;
    if (out.partitions.empty()) {
        ModularityOptions mo;
        mo.seed = cfg.seed;
        out.partitions = infer_nested_hierarchy(g, static_cast<int>(cfg.level_ranks.size()), mo);
    }
    if (out.partitions.size() < cfg.level_ranks.size())
        throw ValidationError("embed: fewer partitions than level ranks");
    LayerStack stack =
        LayerStack::build(g, default_node_weights(g), out.partitions, cfg.scheme);
    out.embedding = hierarchical_svd_embedding(stack, cfg.rank, cfg.level_ranks, svd_opt);
    out.embedding.model.fixed_sigma = cfg.fixed_sigma;
    std::vector<std::size_t> dims(stack.layer_count(), 0);
    dims[0] = 2 * cfg.rank;
    for (std::size_t h = 0; h < cfg.level_ranks.size(); ++h)
        dims[h + 1] = 2 * std::min(cfg.level_ranks[h], stack.layer(h + 1).graph.size());
    out.effective_dim = effective_dimensionality(stack, dims);
    out.nmse = nmse(g, out.embedding);
    return out;
}

std::vector<CompareRecord> run_compare(const SyntheticSpec& spec,
                                       const std::vector<CompareVariant>& variants,
                                       std::size_t replicas, std::uint64_t seed) {
    std::vector<CompareRecord> records;
    for (const auto& variant : variants) {
        CompareRecord rec;
        rec.name = variant.name;
        records.push_back(std::move(rec));
    }
    for (std::size_t rep = 0; rep < replicas; ++rep) {
        SyntheticSpec s = spec;
        s.seed = seed + rep;
        const Graph g = generate_synthetic(s);
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const auto start = std::chrono::steady_clock::now();
            EmbedConfig cfg = variants[v].config;
            cfg.seed = s.seed;
            EmbedOutcome outcome = run_embed_pipeline(g, cfg);
            records[v].nmses.push_back(outcome.nmse);
            records[v].eff_dims.push_back(outcome.effective_dim);
            records[v].wall_time_ms +=
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
        }
    }
    for (auto& rec : records) {
        if (rec.nmses.empty()) continue;
        rec.nmse_min = *std::min_element(rec.nmses.begin(), rec.nmses.end());
        rec.nmse_max = *std::max_element(rec.nmses.begin(), rec.nmses.end());
        rec.nmse_median = median(rec.nmses);
        rec.eff_dim_median = median(rec.eff_dims);
    }
    return records;
}

SoftCommunityResult train_soft_communities(const Graph& g, const SoftCommunityOptions& opt) {
    if (g.has_negative_weights())
        throw ValidationError("community training requires non-negative edge weights");
    const std::size_t k = opt.groups;
    LayerStack stack = LayerStack::build(g, default_node_weights(g), {}, InterLayerScheme::Averaging);

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> small(-0.3, 0.3);

    ModelParams params;
    ActivationParams act;
    act.w_self = Matrix(k, k);
    act.w_nbr = Matrix(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        act.w_self(i, i) = 1.0;
        act.w_nbr(i, i) = 0.5;
    }
    for (auto& v : act.w_self.data()) v += small(rng) * 0.1;
    for (auto& v : act.w_nbr.data()) v += small(rng) * 0.1;
    act.bias.assign(k, 0.0);
    act.phi = Nonlinearity::tanh_fn;
    params.act.steps.push_back({act});

    params.head.identity_transform = false;
    params.head.target = HeadTarget::layer0_nodes;
    params.head.w = Matrix(k, k);
    for (std::size_t i = 0; i < k; ++i) params.head.w(i, i) = 1.0;
    for (auto& v : params.head.w.data()) v += small(rng) * 0.1;
    params.head.b.assign(k, 0.0);
    params.head.phi = Nonlinearity::sigmoid_fn;

    Matrix feat(g.size(), k);
    for (auto& v : feat.data()) v = small(rng);
    params.init_features.push_back(feat);
    params.trainable.features = true;
    params.trainable.activations = true;
    params.trainable.head = true;

    PropagationConfig cfg;
    cfg.iterations = opt.iterations;
    cfg.mode = PropagationMode::recurrent;
    cfg.init = FeatureInit::supplied;
    cfg.seed = opt.seed;

    ObjectiveSpec spec;
    spec.kind = ObjectiveSpec::Kind::soft_modularity;

    TrainConfig tcfg;
    tcfg.method = TrainMethod::grad;
    tcfg.steps = opt.steps;
    tcfg.learning_rate = opt.learning_rate;
    tcfg.seed = opt.seed;

    auto [trained, report] = train(stack, params, cfg, spec, tcfg);

    // Harden: per-row argmax of the normalized head output.
    const PreparedStack ps = prepare(stack, cfg);
    FeatureState init;
    init.x = trained.init_features;
    FeatureState state = run(ps, trained.act, cfg, &init);
    const Matrix y = apply_output_head(state, trained.head);
    std::vector<std::uint32_t> groups(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (y(i, j) > y(i, best)) best = j;
        groups[i] = static_cast<std::uint32_t>(best);
    }
    // Compact group labels so every coarse index is occupied.
    std::vector<std::int64_t> remap(k, -1);
    std::uint32_t next = 0;
    for (auto& c : groups) {
        if (remap[c] < 0) remap[c] = next++;
        c = static_cast<std::uint32_t>(remap[c]);
    }
    SoftCommunityResult result{Partition::discrete(groups, next), 0.0, std::move(report)};
    result.q = modularity(g, result.partition);
    return result;
}

}  // namespace hgnn

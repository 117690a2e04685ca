#include "hgnn/synthetic.hpp"

#include <cmath>
#include <random>

namespace hgnn {

void SyntheticSpec::validate() const {
    if (generator == Generator::erdos_renyi) {
        if (n < 1) throw ValidationError("erdos_renyi: n must be >= 1");
        if (p < 0.0 || p > 1.0) throw ValidationError("erdos_renyi: p must be in [0,1]");
    } else {
        if (levels < 1) throw ValidationError("planted_hierarchy: levels must be >= 1");
        if (branching < 1 || base_block_size < 1)
            throw ValidationError("planted_hierarchy: sizes must be >= 1");
        if (p_in.size() != static_cast<std::size_t>(levels))
            throw ValidationError("planted_hierarchy: p_in must list one density per level");
        for (std::size_t k = 0; k < p_in.size(); ++k) {
            if (p_in[k] < 0.0 || p_in[k] > 1.0)
                throw ValidationError("planted_hierarchy: densities must be in [0,1]");
            if (k > 0 && !(p_in[k] < p_in[k - 1]))
                throw ValidationError("planted_hierarchy: p_in must be strictly decreasing");
        }
        if (p_out < 0.0 || p_out > 1.0)
            throw ValidationError("planted_hierarchy: p_out must be in [0,1]");
        if (!p_in.empty() && !(p_out < p_in.back()))
            throw ValidationError("planted_hierarchy: p_out must be below the coarsest p_in");
    }
    if (weight.kind == WeightDistribution::Kind::uniform && !(weight.lo <= weight.hi))
        throw ValidationError("weight distribution: lo must not exceed hi");
}

namespace {

double draw_weight(const WeightDistribution& w, std::mt19937_64& rng) {
    if (w.kind == WeightDistribution::Kind::constant) return w.value;
    std::uniform_real_distribution<double> dist(w.lo, w.hi);
    return dist(rng);
}

std::size_t planted_size(const SyntheticSpec& s) {
    std::size_t n = s.base_block_size;
    for (int k = 0; k < s.levels; ++k) n *= s.branching;
    return n;
}

// Finest hierarchy level shared by nodes i and j: 0 = same base block,
// levels-1 = same coarsest super-block, levels = unrelated.
int shared_level(const SyntheticSpec& s, std::size_t i, std::size_t j) {
    std::size_t bi = i / s.base_block_size;
    std::size_t bj = j / s.base_block_size;
    for (int k = 0; k < s.levels; ++k) {
        if (bi == bj) return k;
        bi /= s.branching;
        bj /= s.branching;
    }
    return s.levels;
}

}  // namespace

Graph generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    const std::size_t n =
        spec.generator == SyntheticSpec::Generator::erdos_renyi ? spec.n : planted_size(spec);
    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = "n" + std::to_string(i);

    std::vector<Triplet> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double p;
            if (spec.generator == SyntheticSpec::Generator::erdos_renyi) {
                p = spec.p;
            } else {
                const int lvl = shared_level(spec, i, j);
                p = lvl < spec.levels ? spec.p_in[lvl] : spec.p_out;
            }
            if (coin(rng) < p) edges.push_back({i, j, draw_weight(spec.weight, rng)});
        }
    return Graph::from_edges(std::move(labels), std::move(edges), true);
}

std::vector<Partition> planted_partitions(const SyntheticSpec& spec) {
    if (spec.generator != SyntheticSpec::Generator::planted_hierarchy)
        throw ValidationError("planted_partitions requires a planted_hierarchy spec");
    spec.validate();
    std::vector<Partition> out;
    std::size_t fine = planted_size(spec);
    std::size_t block = spec.base_block_size;
    for (int k = 0; k < spec.levels; ++k) {
        const std::size_t coarse = fine / block;
        std::vector<std::uint32_t> groups(fine);
        for (std::size_t i = 0; i < fine; ++i)
            groups[i] = static_cast<std::uint32_t>(i / block);
        out.push_back(Partition::discrete(groups, coarse));
        fine = coarse;
        block = spec.branching;
    }
    return out;
}

}  // namespace hgnn

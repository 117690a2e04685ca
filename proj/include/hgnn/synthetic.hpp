#ifndef HGNN_SYNTHETIC_HPP
#define HGNN_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "hgnn/graph.hpp"
#include "hgnn/hierarchy.hpp"

namespace hgnn {

struct WeightDistribution {
    enum class Kind { constant, uniform };
    Kind kind = Kind::constant;
    double value = 1.0;  // constant
    double lo = 0.5, hi = 1.5;  // uniform
};

struct SyntheticSpec {
    enum class Generator { planted_hierarchy, erdos_renyi };
    Generator generator = Generator::erdos_renyi;
    std::uint64_t seed = 0;

    // erdos_renyi
    std::size_t n = 16;
    double p = 0.1;

    // planted_hierarchy: n = base_block_size * branching^levels nodes in
    // nested blocks; a directed pair's density is p_in[k] for the finest
    // shared level k (p_in strictly decreasing), p_out otherwise.
    int levels = 2;
    std::size_t branching = 2;
    std::size_t base_block_size = 4;
    std::vector<double> p_in{0.9, 0.3};
    double p_out = 0.02;

    WeightDistribution weight;

    void validate() const;
};

Graph generate_synthetic(const SyntheticSpec& spec);

// Ground-truth nested partitions of a planted hierarchy, finest first.
std::vector<Partition> planted_partitions(const SyntheticSpec& spec);

}  // namespace hgnn

#endif

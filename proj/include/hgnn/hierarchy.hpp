#ifndef HGNN_HIERARCHY_HPP
#define HGNN_HIERARCHY_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hgnn/graph.hpp"
#include "hgnn/matrix.hpp"

namespace hgnn {

// Strictly positive per-node weights v^h used by the inter-layer
// normalizations.
struct NodeWeights {
    std::vector<double> v;

    void validate(std::size_t expected_size) const;
};

// Default v^0: weighted in-degree, floored for isolated nodes.
NodeWeights default_node_weights(const Graph& g, double floor = 1e-9);

enum class PartitionKind { discrete, probabilistic };

// Row-stochastic attachment matrix from fine nodes (rows) to coarse nodes
// (columns). Discrete partitions have one-hot rows.
class Partition {
public:
    Partition() = default;

    static Partition discrete(const std::vector<std::uint32_t>& groups, std::size_t n_groups);
    static Partition probabilistic(const Matrix& c);
    static Partition identity(std::size_t n);

    PartitionKind kind() const { return kind_; }
    std::size_t fine_count() const { return c_.rows(); }
    std::size_t coarse_count() const { return c_.cols(); }
    const CsrMatrix& matrix() const { return c_; }

    // Group index per fine node; requires a discrete partition.
    std::vector<std::uint32_t> groups() const;

    void validate() const;

private:
    CsrMatrix c_;
    PartitionKind kind_ = PartitionKind::discrete;
};

enum class InterLayerScheme {
    Averaging,  // target-normalized convex averaging; preserves constants
    Additive,   // source-normalized mass distribution; conserves totals
};

// A^{h+1} = C^T A^h C. Coarse node labels are "c<index>".
Graph aggregate_graph(const Graph& g, const Partition& c);

// v^{h+1} = C^T v^h.
NodeWeights aggregate_weights(const NodeWeights& v, const Partition& c);

// Both operators are indexed (source node, target node); feature transfer
// into a target is sum over sources of H[source,target] * x[source].
// Returns {H_up (fine x coarse), H_down (coarse x fine)}.
std::pair<CsrMatrix, CsrMatrix> interlayer_ops(const Partition& c, const NodeWeights& v,
                                               InterLayerScheme scheme);

class LayerStack {
public:
    struct Layer {
        Graph graph;
        NodeWeights weights;
    };

    static LayerStack build(Graph g, NodeWeights v0, std::vector<Partition> partitions,
                            InterLayerScheme scheme);

    std::size_t layer_count() const { return layers_.size(); }
    std::size_t depth() const { return layers_.size() - 1; }  // h*
    const Layer& layer(std::size_t h) const { return layers_[h]; }
    const std::vector<Partition>& partitions() const { return partitions_; }
    InterLayerScheme scheme() const { return scheme_; }

    // Boundary operators between layers h and h+1, 0 <= h < h*.
    const CsrMatrix& up_op(std::size_t h) const { return up_[h]; }
    const CsrMatrix& down_op(std::size_t h) const { return down_[h]; }

    // H^{h->0}, the composed top-down operator (|L^h| x |L^0|), 1 <= h <= h*.
    CsrMatrix compose_down(std::size_t h) const;

private:
    std::vector<Layer> layers_;
    std::vector<Partition> partitions_;
    std::vector<CsrMatrix> up_;
    std::vector<CsrMatrix> down_;
    InterLayerScheme scheme_ = InterLayerScheme::Averaging;
};

struct ModularityOptions {
    int restarts = 8;
    std::uint64_t seed = 0;
    double gain_tolerance = 1e-12;
};

// Greedy agglomerative merging plus single-node reassignment sweeps,
// best of `restarts` seeded shuffles. Requires non-negative weights and
// positive total weight.
Partition infer_partition_modularity(const Graph& g, const ModularityOptions& opt = {});

// Level-k partition from running modularity search on the (k-1)-aggregated
// graph; once a level collapses to one community the remaining levels are
// single-node identities.
std::vector<Partition> infer_nested_hierarchy(const Graph& g, int levels,
                                              const ModularityOptions& opt = {});

}  // namespace hgnn

#endif

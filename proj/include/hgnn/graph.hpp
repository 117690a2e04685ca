#ifndef HGNN_GRAPH_HPP
#define HGNN_GRAPH_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hgnn/matrix.hpp"

namespace hgnn {

enum class Direction { out, in };

// How the diagonal degree matrices on the two sides of a normalized
// derivative matrix are formed.
enum class DegreeMode { out_out, out_in, in_in };

enum class DerivativeMatrixKind { RawAdjacency, NormalizedAdjacency, NormalizedLaplacian };

// Sparse weighted directed graph. Node identity is a string label; all
// math uses dense indices. Immutable after construction.
class Graph {
public:
    Graph() = default;

    // Duplicate (src,dst) entries are merged by summing weights. When
    // directed=false the merged edge map must be symmetric.
    static Graph from_edges(std::vector<std::string> node_ids, std::vector<Triplet> edges,
                            bool directed = true);

    std::size_t size() const { return node_ids_.size(); }
    bool directed() const { return directed_; }
    const std::vector<std::string>& node_ids() const { return node_ids_; }

    // Adjacency in CSR form, row = source.
    const CsrMatrix& adjacency() const { return adj_; }

    double total_weight() const { return adj_.sum(); }
    std::size_t edge_count() const { return adj_.nnz(); }

    double weight(std::size_t src, std::size_t dst) const { return adj_.coeff(src, dst); }

    bool has_negative_weights() const;

private:
    std::vector<std::string> node_ids_;
    CsrMatrix adj_;
    bool directed_ = true;
};

// `src<TAB>dst<TAB>weight` per line, `#` comments skipped, LF or CRLF.
// Node labels are assigned indices in first-appearance order.
Graph load_edge_list(std::istream& in);
Graph load_edge_list_file(const std::string& path);

void write_edge_list(const Graph& g, std::ostream& out);
void write_edge_list_file(const Graph& g, const std::string& path);

std::vector<double> degrees(const Graph& g, Direction dir);

// RawAdjacency -> A; NormalizedAdjacency -> Dl^{-1/2} A Dr^{-1/2};
// NormalizedLaplacian -> Dl^{-1/2} (Dl - A) Dr^{-1/2}.
// Zero-degree nodes get a 0 (not inf) inverse-sqrt entry, so their rows
// and columns vanish.
CsrMatrix derivative_matrix(const Graph& g, DerivativeMatrixKind kind,
                            DegreeMode mode = DegreeMode::out_out);

}  // namespace hgnn

#endif

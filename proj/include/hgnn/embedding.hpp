#ifndef HGNN_EMBEDDING_HPP
#define HGNN_EMBEDDING_HPP

#include <cstdint>
#include <vector>

#include "hgnn/graph.hpp"
#include "hgnn/hierarchy.hpp"
#include "hgnn/objectives.hpp"
#include "hgnn/propagation.hpp"

namespace hgnn {

enum class EmbeddingProvenance { svd_baseline, flat_gnn, hgnn };

// Paired per-node source/target vectors; mu(l(a), r(b)) predicts the
// directed edge weight a -> b.
struct EmbeddingResult {
    Matrix l;
    Matrix r;
    EdgeModel model;
    EmbeddingProvenance provenance = EmbeddingProvenance::svd_baseline;

    std::size_t dim() const { return l.cols(); }
};

struct SvdOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 10000;
    std::uint64_t seed = 42;
};

// Truncated SVD of a sparse matrix by seeded power iteration with
// deflation. Each singular pair is sign-fixed so the largest-magnitude
// entry of the right vector is positive.
struct TruncatedSvd {
    Matrix u;  // n x d, scaled columns are u_k
    Matrix v;  // n x d
    std::vector<double> sigma;
};
TruncatedSvd truncated_svd(const CsrMatrix& a, std::size_t d, const SvdOptions& opt = {});

// l = U_d sqrt(S), r = V_d sqrt(S); l r^T is the best rank-d Frobenius
// approximation of the adjacency.
EmbeddingResult svd_embedding(const Graph& g, std::size_t d, const SvdOptions& opt = {});

// Final-embedding assembly rule Theta over the per-level aggregates.
struct AssemblyRule {
    enum class Kind { concatenation, affine, mlp };
    Kind kind = Kind::concatenation;
    std::vector<std::size_t> levels;  // hidden levels included, subset of 1..h*
    // affine: y = x W + b over the concatenated blocks
    Matrix w;
    std::vector<double> b;
    // mlp: one hidden layer with tanh
    Matrix w1, w2;
    std::vector<double> b1, b2;
};

// Per node a: Theta(x^0(a), sum_b H^{h->0}[b,a] x^h(b) for each included
// level). Every block must split into equal (l, r) halves; the assembled
// l is the concatenation of the blocks' first halves, r of the second.
EmbeddingResult assemble_hierarchical_embedding(const FeatureState& state, const LayerStack& stack,
                                                const AssemblyRule& rule, const EdgeModel& model);

// Predicted weights for each materialized pair, in pair order.
std::vector<double> reconstruct(const EmbeddingResult& e,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

// Sum over all layers of |L^h| * d_h, normalized by |L^0|.
double effective_dimensionality(const LayerStack& stack, const std::vector<std::size_t>& dims);

// Toolkit-defined normalized reconstruction error over all off-diagonal
// ordered pairs: sum (w - w_hat)^2 / sum w^2.
double nmse(const Graph& g, const EmbeddingResult& e);

// Multi-resolution SVD pipeline: fits the coarsest included level first,
// then each finer level against the disaggregated residual, finishing
// with a rank-d0 fit of the layer-0 residual. Assembled via Eq-style
// concatenation, so the paired dot product reproduces the summed fit.
EmbeddingResult hierarchical_svd_embedding(const LayerStack& stack, std::size_t rank0,
                                           const std::vector<std::size_t>& level_ranks,
                                           const SvdOptions& opt = {});

}  // namespace hgnn

#endif

#include "hgnn/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace hgnn {

void NodeWeights::validate(std::size_t expected_size) const {
    if (v.size() != expected_size) throw ValidationError("node weight length mismatch");
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x))
            throw ValidationError("node weights must be strictly positive and finite");
}

NodeWeights default_node_weights(const Graph& g, double floor) {
    NodeWeights w{degrees(g, Direction::in)};
    for (double& x : w.v) x = std::max(x, floor);
    return w;
}

Partition Partition::discrete(const std::vector<std::uint32_t>& groups, std::size_t n_groups) {
    std::vector<Triplet> ts;
    ts.reserve(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) ts.push_back({i, groups[i], 1.0});
    Partition p;
    p.c_ = CsrMatrix::from_triplets(groups.size(), n_groups, std::move(ts));
    p.kind_ = PartitionKind::discrete;
    p.validate();
    return p;
}

Partition Partition::probabilistic(const Matrix& c) {
    std::vector<Triplet> ts;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j)
            if (c(i, j) != 0.0) ts.push_back({i, j, c(i, j)});
    Partition p;
    p.c_ = CsrMatrix::from_triplets(c.rows(), c.cols(), std::move(ts));
    p.kind_ = PartitionKind::probabilistic;
    p.validate();
    return p;
}

Partition Partition::identity(std::size_t n) {
    std::vector<std::uint32_t> groups(n);
    std::iota(groups.begin(), groups.end(), 0u);
    return discrete(groups, n);
}

std::vector<std::uint32_t> Partition::groups() const {
    if (kind_ != PartitionKind::discrete)
        throw ValidationError("groups() requires a discrete partition");
    std::vector<std::uint32_t> g(c_.rows());
    for (std::size_t i = 0; i < c_.rows(); ++i)
        g[i] = static_cast<std::uint32_t>(c_.entry_col(c_.row_begin(i)));
    return g;
}

void Partition::validate() const {
    std::vector<double> col_mass(c_.cols(), 0.0);
    for (std::size_t i = 0; i < c_.rows(); ++i) {
        double row_sum = 0.0;
        std::size_t nonzeros = 0;
        for (std::size_t k = c_.row_begin(i); k < c_.row_end(i); ++k) {
            const double v = c_.entry_value(k);
            if (v < 0.0) throw ValidationError("partition attachment weights must be non-negative");
            if (v != 0.0) ++nonzeros;
            row_sum += v;
            col_mass[c_.entry_col(k)] += v;
        }
        if (std::abs(row_sum - 1.0) > 1e-12)
            throw ValidationError("partition rows must sum to 1");
        if (kind_ == PartitionKind::discrete &&
            (nonzeros != 1 || std::abs(c_.entry_value(c_.row_begin(i)) - 1.0) > 0.0))
            throw ValidationError("discrete partition rows must be one-hot");
    }
    for (double m : col_mass)
        if (m == 0.0) throw ValidationError("partition has an unattached coarse node");
}

Graph aggregate_graph(const Graph& g, const Partition& c) {
    if (c.fine_count() != g.size())
        throw ValidationError("aggregate_graph: partition row count does not match graph size");
    const CsrMatrix ct = c.matrix().transposed();
    CsrMatrix coarse = ct.multiply(g.adjacency()).multiply(c.matrix());
    std::vector<std::string> labels(c.coarse_count());
    for (std::size_t j = 0; j < labels.size(); ++j) labels[j] = "c" + std::to_string(j);
    std::vector<Triplet> ts;
    ts.reserve(coarse.nnz());
    for (std::size_t r = 0; r < coarse.rows(); ++r)
        for (std::size_t k = coarse.row_begin(r); k < coarse.row_end(r); ++k)
            ts.push_back({r, coarse.entry_col(k), coarse.entry_value(k)});
    return Graph::from_edges(std::move(labels), std::move(ts), true);
}

NodeWeights aggregate_weights(const NodeWeights& v, const Partition& c) {
    if (v.v.size() != c.fine_count())
        throw ValidationError("aggregate_weights: weight length does not match partition");
    NodeWeights out{c.matrix().transposed().apply_vec(v.v)};
    out.validate(c.coarse_count());
    return out;
}

std::pair<CsrMatrix, CsrMatrix> interlayer_ops(const Partition& c, const NodeWeights& v,
                                               InterLayerScheme scheme) {
    v.validate(c.fine_count());
    const CsrMatrix& m = c.matrix();

    std::vector<double> mass(c.coarse_count(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k)
            mass[m.entry_col(k)] += m.entry_value(k) * v.v[i];
    for (double s : mass)
        if (s <= 0.0) throw ValidationError("interlayer_ops: partition column has no weight mass");

    std::vector<Triplet> plain, weighted;
    plain.reserve(m.nnz());
    weighted.reserve(m.nnz());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k) {
            const std::size_t j = m.entry_col(k);
            plain.push_back({i, j, m.entry_value(k)});
            weighted.push_back({i, j, m.entry_value(k) * v.v[i] / mass[j]});
        }

    if (scheme == InterLayerScheme::Averaging) {
        CsrMatrix up = CsrMatrix::from_triplets(m.rows(), m.cols(), std::move(weighted));
        CsrMatrix down =
            CsrMatrix::from_triplets(m.rows(), m.cols(), std::move(plain)).transposed();
        return {std::move(up), std::move(down)};
    }
    CsrMatrix up = CsrMatrix::from_triplets(m.rows(), m.cols(), std::move(plain));
    CsrMatrix down =
        CsrMatrix::from_triplets(m.rows(), m.cols(), std::move(weighted)).transposed();
    return {std::move(up), std::move(down)};
}

LayerStack LayerStack::build(Graph g, NodeWeights v0, std::vector<Partition> partitions,
                             InterLayerScheme scheme) {
    v0.validate(g.size());
    LayerStack s;
    s.scheme_ = scheme;
    s.layers_.push_back({std::move(g), std::move(v0)});
    for (std::size_t h = 0; h < partitions.size(); ++h) {
        const Layer& cur = s.layers_.back();
        if (partitions[h].fine_count() != cur.graph.size()) {
            std::ostringstream msg;
            msg << "layer " << h << ": partition rows (" << partitions[h].fine_count()
                << ") do not match layer size (" << cur.graph.size() << ")";
            throw ValidationError(msg.str());
        }
        auto [up, down] = interlayer_ops(partitions[h], cur.weights, scheme);
        Graph coarse = aggregate_graph(cur.graph, partitions[h]);
        NodeWeights cw = aggregate_weights(cur.weights, partitions[h]);
        s.up_.push_back(std::move(up));
        s.down_.push_back(std::move(down));
        s.layers_.push_back({std::move(coarse), std::move(cw)});
    }
    s.partitions_ = std::move(partitions);
    return s;
}

CsrMatrix LayerStack::compose_down(std::size_t h) const {
    if (h < 1 || h > depth()) throw ValidationError("compose_down: level out of range");
    CsrMatrix m = down_[h - 1];
    for (std::size_t k = h - 1; k > 0; --k) m = m.multiply(down_[k - 1]);
    return m;
}

// ---------------------------------------------------------------------------
// Modularity search
// ---------------------------------------------------------------------------

namespace {

struct ModularityContext {
    const Graph* g;
    double total;
    std::vector<double> dout, din;

    double q(const std::vector<std::uint32_t>& comm, std::size_t n_comm) const {
        std::vector<double> internal(n_comm, 0.0), co(n_comm, 0.0), ci(n_comm, 0.0);
        const CsrMatrix& a = g->adjacency();
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k)
                if (comm[r] == comm[a.entry_col(k)]) internal[comm[r]] += a.entry_value(k);
        for (std::size_t i = 0; i < comm.size(); ++i) {
            co[comm[i]] += dout[i];
            ci[comm[i]] += din[i];
        }
        double q = 0.0;
        for (std::size_t c = 0; c < n_comm; ++c)
            q += internal[c] / total - co[c] * ci[c] / (total * total);
        return q;
    }
};

std::size_t compact_labels(std::vector<std::uint32_t>& comm) {
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    for (auto& c : comm) {
        auto it = remap.find(c);
        if (it == remap.end()) {
            const std::uint32_t id = static_cast<std::uint32_t>(remap.size());
            remap.emplace(c, id);
            c = id;
        } else {
            c = it->second;
        }
    }
    return remap.size();
}

// Greedy merging of community pairs while the best gain stays positive.
bool merge_phase(const ModularityContext& ctx, std::vector<std::uint32_t>& comm,
                 const std::vector<std::size_t>& order, double tol) {
    bool changed = false;
    const CsrMatrix& a = ctx.g->adjacency();
    for (;;) {
        std::size_t n_comm = compact_labels(comm);
        if (n_comm <= 1) break;
        std::vector<double> co(n_comm, 0.0), ci(n_comm, 0.0);
        for (std::size_t i = 0; i < comm.size(); ++i) {
            co[comm[i]] += ctx.dout[i];
            ci[comm[i]] += ctx.din[i];
        }
        // Symmetrized inter-community weights.
        std::unordered_map<std::uint64_t, double> between;
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k) {
                const std::uint32_t c1 = comm[r];
                const std::uint32_t c2 = comm[a.entry_col(k)];
                if (c1 == c2) continue;
                const std::uint64_t key =
                    c1 < c2 ? (std::uint64_t(c1) << 32) | c2 : (std::uint64_t(c2) << 32) | c1;
                between[key] += a.entry_value(k);
            }
        double best_gain = tol;
        std::uint64_t best_key = 0;
        bool found = false;
        // Scan order follows the restart shuffle so ties break differently
        // between restarts.
        std::vector<std::uint64_t> keys;
        keys.reserve(between.size());
        for (const auto& [key, w] : between) keys.push_back(key);
        std::sort(keys.begin(), keys.end(), [&](std::uint64_t x, std::uint64_t y) {
            const std::size_t rx = order[(x >> 32) % order.size()] ^ order[(x & 0xffffffffu) % order.size()];
            const std::size_t ry = order[(y >> 32) % order.size()] ^ order[(y & 0xffffffffu) % order.size()];
            return rx != ry ? rx < ry : x < y;
        });
        for (std::uint64_t key : keys) {
            const std::uint32_t c1 = static_cast<std::uint32_t>(key >> 32);
            const std::uint32_t c2 = static_cast<std::uint32_t>(key & 0xffffffffu);
            const double gain = between[key] / ctx.total -
                                (co[c1] * ci[c2] + co[c2] * ci[c1]) / (ctx.total * ctx.total);
            if (gain > best_gain) {
                best_gain = gain;
                best_key = key;
                found = true;
            }
        }
        if (!found) break;
        const std::uint32_t keep = static_cast<std::uint32_t>(best_key >> 32);
        const std::uint32_t gone = static_cast<std::uint32_t>(best_key & 0xffffffffu);
        for (auto& c : comm)
            if (c == gone) c = keep;
        changed = true;
    }
    compact_labels(comm);
    return changed;
}

// Single-node reassignment sweeps until no move improves modularity.
bool sweep_phase(const ModularityContext& ctx, std::vector<std::uint32_t>& comm,
                 const std::vector<std::size_t>& order, double tol) {
    const CsrMatrix& a = ctx.g->adjacency();
    const CsrMatrix at = a.transposed();
    bool changed = false;
    bool improved = true;
    while (improved) {
        improved = false;
        std::size_t n_comm = compact_labels(comm);
        std::vector<double> co(n_comm, 0.0), ci(n_comm, 0.0);
        for (std::size_t i = 0; i < comm.size(); ++i) {
            co[comm[i]] += ctx.dout[i];
            ci[comm[i]] += ctx.din[i];
        }
        for (std::size_t idx : order) {
            const std::uint32_t cur = comm[idx];
            // Symmetrized edge weight from node idx to each community,
            // excluding its self-loop (which moves with the node).
            std::vector<double> w_to(n_comm + 1, 0.0);
            for (std::size_t k = a.row_begin(idx); k < a.row_end(idx); ++k)
                if (a.entry_col(k) != idx) w_to[comm[a.entry_col(k)]] += a.entry_value(k);
            for (std::size_t k = at.row_begin(idx); k < at.row_end(idx); ++k)
                if (at.entry_col(k) != idx) w_to[comm[at.entry_col(k)]] += at.entry_value(k);

            const double t = ctx.total;
            const double co_cur = co[cur] - ctx.dout[idx];
            const double ci_cur = ci[cur] - ctx.din[idx];
            const double leave_cost =
                w_to[cur] / t - (ctx.dout[idx] * ci_cur + ctx.din[idx] * co_cur) / (t * t);
            double best_gain = tol;
            std::uint32_t best_c = cur;
            // Candidate set: every existing community plus a fresh one.
            for (std::uint32_t c = 0; c <= n_comm; ++c) {
                if (c == cur) continue;
                const double co_c = c < n_comm ? co[c] : 0.0;
                const double ci_c = c < n_comm ? ci[c] : 0.0;
                const double join =
                    w_to[c] / t - (ctx.dout[idx] * ci_c + ctx.din[idx] * co_c) / (t * t);
                const double gain = join - leave_cost;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_c = c;
                }
            }
            if (best_c != cur) {
                if (best_c == n_comm) {
                    co.push_back(0.0);
                    ci.push_back(0.0);
                    w_to.push_back(0.0);
                    ++n_comm;
                }
                co[cur] -= ctx.dout[idx];
                ci[cur] -= ctx.din[idx];
                co[best_c] += ctx.dout[idx];
                ci[best_c] += ctx.din[idx];
                comm[idx] = best_c;
                improved = true;
                changed = true;
            }
        }
    }
    compact_labels(comm);
    return changed;
}

}  // namespace

Partition infer_partition_modularity(const Graph& g, const ModularityOptions& opt) {
    if (g.size() == 0) throw ValidationError("modularity search: empty graph");
    if (g.has_negative_weights())
        throw ValidationError("modularity search requires non-negative edge weights");
    ModularityContext ctx{&g, g.total_weight(), degrees(g, Direction::out),
                          degrees(g, Direction::in)};
    if (!(ctx.total > 0.0)) throw ValidationError("modularity search: total weight must be > 0");

    std::vector<std::uint32_t> best;
    double best_q = -2.0;
    for (int r = 0; r < opt.restarts; ++r) {
        std::mt19937_64 rng(opt.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(r));
        std::vector<std::size_t> order(g.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);

        // Restart 0 runs the classic singleton start; later restarts begin
        // from random coarse assignments so they explore different basins.
        std::vector<std::uint32_t> comm(g.size());
        if (r == 0) {
            std::iota(comm.begin(), comm.end(), 0u);
        } else {
            std::uniform_int_distribution<std::uint32_t> kdist(
                1, static_cast<std::uint32_t>(g.size()));
            std::uniform_int_distribution<std::uint32_t> cdist(0, kdist(rng) - 1);
            for (auto& c : comm) c = cdist(rng);
        }
        bool changed = true;
        while (changed) {
            const bool m = merge_phase(ctx, comm, order, opt.gain_tolerance);
            const bool s = sweep_phase(ctx, comm, order, opt.gain_tolerance);
            changed = m || s;
        }
        const double q = ctx.q(comm, compact_labels(comm));
        if (q > best_q + 1e-15) {
            best_q = q;
            best = comm;
        }
    }
    // The single-community partition scores exactly 0; never return worse.
    if (best_q < 0.0) best.assign(g.size(), 0u);
    const std::size_t n_comm = compact_labels(best);
    return Partition::discrete(best, n_comm);
}

std::vector<Partition> infer_nested_hierarchy(const Graph& g, int levels,
                                               const ModularityOptions& opt) {
    if (levels < 1) throw ValidationError("infer_nested_hierarchy: levels must be >= 1");
    std::vector<Partition> out;
    Graph cur = g;
    bool collapsed = false;
    for (int k = 0; k < levels; ++k) {
        if (collapsed) {
            out.push_back(Partition::identity(cur.size()));
            continue;
        }
        Partition p = infer_partition_modularity(cur, opt);
        if (p.coarse_count() == 1) collapsed = true;
        cur = aggregate_graph(cur, p);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace hgnn

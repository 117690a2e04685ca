#include "hgnn/objectives.hpp"

namespace hgnn {

std::vector<std::pair<std::size_t, std::size_t>> PairSet::materialize(const Graph& g) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    switch (kind) {
        case Kind::all_off_diagonal:
            out.reserve(g.size() * (g.size() - 1));
            for (std::size_t i = 0; i < g.size(); ++i)
                for (std::size_t j = 0; j < g.size(); ++j)
                    if (i != j) out.emplace_back(i, j);
            break;
        case Kind::observed_plus_sampled_negatives: {
            const CsrMatrix& a = g.adjacency();
            std::unordered_set<std::uint64_t> seen;
            auto key = [&](std::size_t i, std::size_t j) {
                return (static_cast<std::uint64_t>(i) << 32) | j;
            };
            for (std::size_t i = 0; i < a.rows(); ++i)
                for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k) {
                    out.emplace_back(i, a.entry_col(k));
                    seen.insert(key(i, a.entry_col(k)));
                }
            std::mt19937_64 rng(seed);
            std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
            std::size_t added = 0;
            std::size_t attempts = 0;
            const std::size_t max_attempts = 100 * (negative_count + 1);
            while (added < negative_count && attempts < max_attempts) {
                ++attempts;
                const std::size_t i = pick(rng);
                const std::size_t j = pick(rng);
                if (i == j || seen.count(key(i, j))) continue;
                seen.insert(key(i, j));
                out.emplace_back(i, j);
                ++added;
            }
            break;
        }
        case Kind::explicit_list:
            out = pairs;
            for (const auto& [i, j] : out)
                if (i >= g.size() || j >= g.size())
                    throw ValidationError("explicit pair index out of range");
            break;
    }
    return out;
}

double modularity(const Graph& g, const Matrix& assignment) {
    for (std::size_t i = 0; i < assignment.rows(); ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < assignment.cols(); ++c) {
            if (assignment(i, c) < 0.0)
                throw ValidationError("modularity: assignment entries must be non-negative");
            s += assignment(i, c);
        }
        if (std::abs(s - 1.0) > 1e-9)
            throw ValidationError("modularity: assignment rows must sum to 1");
    }
    return soft_modularity(g, assignment);
}

double modularity(const Graph& g, const Partition& p) {
    return soft_modularity(g, p.matrix().to_dense());
}

}  // namespace hgnn

#ifndef HGNN_OBJECTIVES_HPP
#define HGNN_OBJECTIVES_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hgnn/graph.hpp"
#include "hgnn/hierarchy.hpp"
#include "hgnn/propagation.hpp"

namespace hgnn {

enum class EdgeModelKind { Bernoulli, Gaussian, GaussianFixedSigma };

// Probabilistic edge-weight model. The link eta(l,r) is an affine map of
// (l, r, l.r); Bernoulli uses p = sigmoid(eta_mu), Gaussian uses
// mu = phi(eta_mu) and sigma = softplus(eta_sigma) floored at 1e-6.
template <class T>
struct EdgeModelT {
    EdgeModelKind kind = EdgeModelKind::GaussianFixedSigma;
    T mu_dot = T(1.0);
    std::vector<T> mu_wl, mu_wr;  // empty = zero
    T mu_bias = T(0.0);
    Nonlinearity mu_phi = Nonlinearity::identity;
    T sig_dot = T(0.0);
    std::vector<T> sig_wl, sig_wr;
    T sig_bias = T(0.0);
    double fixed_sigma = 1.0;

    static constexpr double kSigmaFloor = 1e-6;
    static constexpr double kProbClamp = 1e-12;
};
using EdgeModel = EdgeModelT<double>;

namespace detail {

template <class T>
T link(const T* l, const T* r, std::size_t d, const T& dot_w, const std::vector<T>& wl,
       const std::vector<T>& wr, const T& bias) {
    T dot = T(0.0);
    for (std::size_t k = 0; k < d; ++k) dot += l[k] * r[k];
    T eta = dot_w * dot + bias;
    for (std::size_t k = 0; k < wl.size(); ++k) eta += wl[k] * l[k];
    for (std::size_t k = 0; k < wr.size(); ++k) eta += wr[k] * r[k];
    return eta;
}

}  // namespace detail

template <class T>
T edge_mu(const EdgeModelT<T>& m, const T* l, const T* r, std::size_t d) {
    return apply_nonlinearity(m.mu_phi,
                              detail::link(l, r, d, m.mu_dot, m.mu_wl, m.mu_wr, m.mu_bias));
}

template <class T>
T edge_sigma(const EdgeModelT<T>& m, const T* l, const T* r, std::size_t d) {
    if (m.kind == EdgeModelKind::GaussianFixedSigma) return T(m.fixed_sigma);
    T eta = detail::link(l, r, d, m.sig_dot, m.sig_wl, m.sig_wr, m.sig_bias);
    return softplus(eta) + EdgeModelT<T>::kSigmaFloor;
}

template <class T>
T edge_probability(const EdgeModelT<T>& m, const T* l, const T* r, std::size_t d) {
    using std::exp;
    T eta = detail::link(l, r, d, m.mu_dot, m.mu_wl, m.mu_wr, m.mu_bias);
    T p = 1.0 / (1.0 + exp(-eta));
    if (value(p) < EdgeModelT<T>::kProbClamp) return T(EdgeModelT<T>::kProbClamp);
    if (value(p) > 1.0 - EdgeModelT<T>::kProbClamp) return T(1.0 - EdgeModelT<T>::kProbClamp);
    return p;
}

// Ordered node-pair enumeration for the likelihood sums.
struct PairSet {
    enum class Kind { all_off_diagonal, observed_plus_sampled_negatives, explicit_list };
    Kind kind = Kind::all_off_diagonal;
    std::size_t negative_count = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // explicit_list

    std::vector<std::pair<std::size_t, std::size_t>> materialize(const Graph& g) const;
};

namespace detail {

// Deterministic blocked reduction: partial block sums are combined in a
// fixed order, so the double path can run blocks in parallel.
template <class T, class F>
T blocked_sum(std::size_t count, F&& term) {
    constexpr std::size_t kBlock = 1024;
    const std::size_t n_blocks = (count + kBlock - 1) / kBlock;
    if constexpr (std::is_same_v<T, double>) {
        std::vector<double> partial(n_blocks, 0.0);
        const std::int64_t nb = static_cast<std::int64_t>(n_blocks);
#pragma omp parallel for schedule(static)
        for (std::int64_t b = 0; b < nb; ++b) {
            double s = 0.0;
            const std::size_t hi = std::min(count, (static_cast<std::size_t>(b) + 1) * kBlock);
            for (std::size_t i = static_cast<std::size_t>(b) * kBlock; i < hi; ++i) s += term(i);
            partial[static_cast<std::size_t>(b)] = s;
        }
        double total = 0.0;
        for (double s : partial) total += s;
        return total;
    } else {
        T total = T(0.0);
        for (std::size_t i = 0; i < count; ++i) total += term(i);
        return total;
    }
}

}  // namespace detail

// Joint log-likelihood of observed weights over the pair set. Bernoulli
// requires {0,1} weights; Gaussian drops the constant term.
template <class T>
T log_likelihood(const Graph& g, const Mat<T>& l, const Mat<T>& r, const EdgeModelT<T>& m,
                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    using std::log;
    if (l.cols() != r.cols() || l.rows() != g.size() || r.rows() != g.size())
        throw ValidationError("log_likelihood: embedding dimension mismatch");
    const std::size_t d = l.cols();
    if (m.kind == EdgeModelKind::Bernoulli) {
        for (const auto& [a, b] : pairs) {
            const double w = g.weight(a, b);
            if (w != 0.0 && w != 1.0)
                throw ValidationError("Bernoulli model requires binary weights over the pair set");
        }
        return detail::blocked_sum<T>(pairs.size(), [&](std::size_t i) {
            const auto& [a, b] = pairs[i];
            const double w = g.weight(a, b);
            T p = edge_probability(m, l.row(a), r.row(b), d);
            return w * log(p) + (1.0 - w) * log(1.0 - p);
        });
    }
    return detail::blocked_sum<T>(pairs.size(), [&](std::size_t i) {
        const auto& [a, b] = pairs[i];
        const double w = g.weight(a, b);
        T mu = edge_mu(m, l.row(a), r.row(b), d);
        T sig = edge_sigma(m, l.row(a), r.row(b), d);
        T diff = w - mu;
        return T(0.0) - diff * diff / (2.0 * sig * sig) - log(sig);
    });
}

template <class T>
T squared_error_objective(const Graph& g, const Mat<T>& l, const Mat<T>& r,
                          const EdgeModelT<T>& m,
                          const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    if (l.cols() != r.cols() || l.rows() != g.size() || r.rows() != g.size())
        throw ValidationError("squared_error_objective: embedding dimension mismatch");
    const std::size_t d = l.cols();
    return detail::blocked_sum<T>(pairs.size(), [&](std::size_t i) {
        const auto& [a, b] = pairs[i];
        T diff = g.weight(a, b) - edge_mu(m, l.row(a), r.row(b), d);
        return diff * diff;
    });
}

// Directed modularity of a row-stochastic soft assignment (n x k).
// Q = (1/T) sum_g sum_ij P[i,g] P[j,g] (A[ij] - dout_i * din_j / T).
template <class T>
T soft_modularity(const Graph& g, const Mat<T>& assignment) {
    if (assignment.rows() != g.size()) throw ValidationError("modularity: assignment size mismatch");
    if (g.has_negative_weights())
        throw ValidationError("modularity requires non-negative edge weights");
    const double total = g.total_weight();
    if (!(total > 0.0)) throw ValidationError("modularity: total weight must be > 0");
    const std::size_t k = assignment.cols();
    if (k == 1) {
        // Single-community modularity is identically zero; skip the float
        // arithmetic so the pinned value is exact.
        bool all_one = true;
        for (const T& x : assignment.data())
            if (value(x) != 1.0) all_one = false;
        if (all_one) return T(0.0);
    }
    const std::vector<double> dout = degrees(g, Direction::out);
    const std::vector<double> din = degrees(g, Direction::in);

    const CsrMatrix& a = g.adjacency();
    T edge_part = T(0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t e = a.row_begin(i); e < a.row_end(i); ++e) {
            const std::size_t j = a.entry_col(e);
            T overlap = T(0.0);
            for (std::size_t c = 0; c < k; ++c) overlap += assignment(i, c) * assignment(j, c);
            edge_part += a.entry_value(e) * overlap;
        }
    T degree_part = T(0.0);
    for (std::size_t c = 0; c < k; ++c) {
        T so = T(0.0), si = T(0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            so += dout[i] * assignment(i, c);
            si += din[i] * assignment(i, c);
        }
        degree_part += so * si;
    }
    return edge_part / total - degree_part / (total * total);
}

double modularity(const Graph& g, const Matrix& assignment);
double modularity(const Graph& g, const Partition& p);

enum class LabelLossKind { mse, bce };

template <class T>
T node_label_loss(const Mat<T>& pred, const Matrix& truth, LabelLossKind kind) {
    using std::log;
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw ValidationError("node_label_loss: shape mismatch");
    const std::size_t count = pred.data().size();
    if (count == 0) throw ValidationError("node_label_loss: empty input");
    if (kind == LabelLossKind::mse) {
        T s = detail::blocked_sum<T>(count, [&](std::size_t i) {
            T diff = pred.data()[i] - truth.data()[i];
            return diff * diff;
        });
        return s / static_cast<double>(count);
    }
    for (std::size_t i = 0; i < count; ++i) {
        const double t = truth.data()[i];
        if (t != 0.0 && t != 1.0) throw ValidationError("bce requires binary truth labels");
        const double p = value(pred.data()[i]);
        if (!(p > 0.0 && p < 1.0)) throw ValidationError("bce requires predictions in (0,1)");
    }
    T s = detail::blocked_sum<T>(count, [&](std::size_t i) {
        const double t = truth.data()[i];
        const T& p = pred.data()[i];
        return T(0.0) - (t * log(p) + (1.0 - t) * log(1.0 - p));
    });
    return s / static_cast<double>(count);
}

template <class L>
double classification_accuracy(const std::vector<L>& pred, const std::vector<L>& truth) {
    if (pred.size() != truth.size())
        throw ValidationError("classification_accuracy: length mismatch");
    if (pred.empty()) throw ValidationError("classification_accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace hgnn

#endif

#ifndef HGNN_PROPAGATION_HPP
#define HGNN_PROPAGATION_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <type_traits>
#include <vector>

#include "hgnn/ad.hpp"
#include "hgnn/hierarchy.hpp"

namespace hgnn {

using ad::is_finite;
using ad::value;

enum class Nonlinearity { identity, tanh_fn, sigmoid_fn, relu_fn };

template <class T>
T apply_nonlinearity(Nonlinearity phi, const T& z) {
    using std::exp;
    using std::tanh;
    switch (phi) {
        case Nonlinearity::identity: return z;
        case Nonlinearity::tanh_fn: return tanh(z);
        case Nonlinearity::sigmoid_fn: return 1.0 / (1.0 + exp(-z));
        case Nonlinearity::relu_fn: return value(z) > 0.0 ? z : T(0.0);
    }
    return z;
}

template <class T>
T softplus(const T& z) {
    using std::exp;
    using std::log;
    if (value(z) > 30.0) return z;
    return log(1.0 + exp(z));
}

// Dispatch helpers: the double paths use the OpenMP kernels.
template <class T>
Mat<T> dense_mm(const Mat<T>& a, const Mat<T>& b) {
    return matmul(a, b);
}
inline Matrix dense_mm(const Matrix& a, const Matrix& b) { return matmul_omp(a, b); }

// Per-layer activation f^h: a generalized linear map of the four Eq-style
// aggregates, optionally widened into a one-hidden-layer MLP
// (mlp_hidden > 0). Weight blocks are (input dim x output dim); absent
// boundary blocks stay empty.
template <class T>
struct ActivationParamsT {
    Mat<T> w_self, w_nbr, w_down, w_up;
    std::vector<T> bias;
    Nonlinearity phi = Nonlinearity::identity;
    std::size_t mlp_hidden = 0;
    Mat<T> w_out;
    std::vector<T> bias_out;

    std::size_t feature_dim() const { return mlp_hidden > 0 ? w_out.cols() : w_self.cols(); }
};
using ActivationParams = ActivationParamsT<double>;

// One parameter set per iteration (shallow) or a single shared set
// (recurrent); each set holds one ActivationParams per layer.
template <class T>
struct HgnnParamsT {
    std::vector<std::vector<ActivationParamsT<T>>> steps;

    const std::vector<ActivationParamsT<T>>& at_iteration(std::size_t i) const {
        return steps.size() == 1 ? steps[0] : steps[i];
    }
};
using HgnnParams = HgnnParamsT<double>;

template <class T>
struct FeatureStateT {
    std::vector<Mat<T>> x;  // per layer, |L^h| x d_h
    std::size_t iteration = 0;
};
using FeatureState = FeatureStateT<double>;

enum class PropagationMode { recurrent, shallow };
enum class FeatureInit { zeros, uniform_random, supplied };

struct PropagationConfig {
    std::size_t iterations = 1;
    PropagationMode mode = PropagationMode::recurrent;
    std::vector<DerivativeMatrixKind> derivative_kinds;  // per layer; empty = NormalizedAdjacency
    DegreeMode degree_mode = DegreeMode::out_out;
    FeatureInit init = FeatureInit::uniform_random;
    std::uint64_t seed = 0;
    double init_range = 0.1;
};

// Target-major operators precomputed once per (stack, config) pair: row r
// of each matrix lists the sources feeding node r.
struct PreparedStack {
    const LayerStack* stack = nullptr;
    std::vector<CsrMatrix> nbr;         // transposed derivative matrix per layer
    std::vector<CsrMatrix> from_below;  // transposed H^{h-1 -> h}, index h-1
    std::vector<CsrMatrix> from_above;  // transposed H^{h+1 -> h}, index h

    std::size_t layer_count() const { return nbr.size(); }
};

inline PreparedStack prepare(const LayerStack& stack, const PropagationConfig& cfg) {
    PreparedStack ps;
    ps.stack = &stack;
    for (std::size_t h = 0; h < stack.layer_count(); ++h) {
        const DerivativeMatrixKind kind = cfg.derivative_kinds.empty()
                                              ? DerivativeMatrixKind::NormalizedAdjacency
                                              : cfg.derivative_kinds.at(h);
        ps.nbr.push_back(derivative_matrix(stack.layer(h).graph, kind, cfg.degree_mode).transposed());
    }
    for (std::size_t h = 0; h + 1 < stack.layer_count(); ++h) {
        ps.from_below.push_back(stack.up_op(h).transposed());
        ps.from_above.push_back(stack.down_op(h).transposed());
    }
    return ps;
}

namespace detail {

template <class T>
void add_contribution(Mat<T>& z, const Mat<T>& src, const Mat<T>& w) {
    if (w.empty()) return;
    Mat<T> part = dense_mm(src, w);
    for (std::size_t i = 0; i < z.data().size(); ++i) z.data()[i] += part.data()[i];
}

template <class T>
Mat<T> activation_output(const ActivationParamsT<T>& p, const Mat<T>& x_self, const Mat<T>& s_nbr,
                         const Mat<T>* s_down, const Mat<T>* s_up) {
    const std::size_t n = x_self.rows();
    const std::size_t m = p.mlp_hidden > 0 ? p.mlp_hidden : p.w_self.cols();
    Mat<T> z(n, m);
    add_contribution(z, x_self, p.w_self);
    add_contribution(z, s_nbr, p.w_nbr);
    if (s_down) add_contribution(z, *s_down, p.w_down);
    if (s_up) add_contribution(z, *s_up, p.w_up);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) z(i, j) = apply_nonlinearity(p.phi, z(i, j) + p.bias[j]);
    if (p.mlp_hidden == 0) return z;
    Mat<T> out = dense_mm(z, p.w_out);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += p.bias_out[j];
    return out;
}

}  // namespace detail

// One synchronous (Jacobi) update of every layer: all reads come from the
// incoming state, all writes go to the returned state.
template <class T>
FeatureStateT<T> hgnn_step(const FeatureStateT<T>& state, const PreparedStack& ps,
                           const std::vector<ActivationParamsT<T>>& params) {
    const std::size_t layers = ps.layer_count();
    if (state.x.size() != layers || params.size() != layers)
        throw ValidationError("hgnn_step: state/params layer count mismatch");
    FeatureStateT<T> next;
    next.iteration = state.iteration + 1;
    next.x.resize(layers);
    for (std::size_t h = 0; h < layers; ++h) {
        Mat<T> s_nbr = ps.nbr[h].apply(state.x[h]);
        Mat<T> s_down, s_up;
        const bool has_down = h > 0;
        const bool has_up = h + 1 < layers;
        if (has_down) s_down = ps.from_below[h - 1].apply(state.x[h - 1]);
        if (has_up) s_up = ps.from_above[h].apply(state.x[h + 1]);
        next.x[h] = detail::activation_output(params[h], state.x[h], s_nbr,
                                              has_down ? &s_down : nullptr,
                                              has_up ? &s_up : nullptr);
        for (const T& v : next.x[h].data())
            if (!is_finite(v)) {
                std::ostringstream msg;
                msg << "non-finite feature at layer " << h << ", iteration " << next.iteration;
                throw NumericError(msg.str());
            }
    }
    return next;
}

template <class T>
FeatureStateT<T> initial_state(const PreparedStack& ps, const HgnnParamsT<T>& params,
                               const PropagationConfig& cfg) {
    FeatureStateT<T> s;
    s.iteration = 0;
    for (std::size_t h = 0; h < ps.layer_count(); ++h) {
        const std::size_t d = params.steps[0][h].w_self.rows();
        s.x.emplace_back(ps.stack->layer(h).graph.size(), d);
    }
    if (cfg.init == FeatureInit::uniform_random) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> dist(-cfg.init_range, cfg.init_range);
        for (auto& layer : s.x)
            for (auto& v : layer.data()) v = T(dist(rng));
    }
    return s;
}

template <class T>
FeatureStateT<T> run(const PreparedStack& ps, const HgnnParamsT<T>& params,
                     const PropagationConfig& cfg, const FeatureStateT<T>* supplied = nullptr) {
    if (cfg.iterations < 1) throw ValidationError("propagation requires at least one iteration");
    if (cfg.mode == PropagationMode::shallow && params.steps.size() != cfg.iterations)
        throw ValidationError("shallow mode requires one parameter set per iteration");
    if (cfg.mode == PropagationMode::recurrent && params.steps.size() != 1)
        throw ValidationError("recurrent mode carries a single parameter set");
    FeatureStateT<T> state;
    if (cfg.init == FeatureInit::supplied) {
        if (!supplied) throw ValidationError("supplied feature init without a supplied state");
        state = *supplied;
        state.iteration = 0;
    } else {
        state = initial_state(ps, params, cfg);
    }
    for (std::size_t i = 0; i < cfg.iterations; ++i)
        state = hgnn_step(state, ps, params.at_iteration(i));
    return state;
}

enum class HeadTarget { layer0_nodes, top_layer_nodes };

// Output head g: identity or an affine map plus nonlinearity over the
// target layer's final features.
template <class T>
struct OutputHeadT {
    HeadTarget target = HeadTarget::layer0_nodes;
    bool identity_transform = true;
    Mat<T> w;
    std::vector<T> b;
    Nonlinearity phi = Nonlinearity::identity;
};
using OutputHead = OutputHeadT<double>;

template <class T>
Mat<T> apply_output_head(const FeatureStateT<T>& state, const OutputHeadT<T>& head) {
    const Mat<T>& src =
        head.target == HeadTarget::layer0_nodes ? state.x.front() : state.x.back();
    if (head.identity_transform) return src;
    if (head.w.rows() != src.cols()) throw ValidationError("output head dimension mismatch");
    Mat<T> y = dense_mm(src, head.w);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < y.cols(); ++j)
            y(i, j) = apply_nonlinearity(head.phi, y(i, j) + head.b[j]);
    return y;
}

// Identity-configured params: W_self = I, everything else zero.
ActivationParams identity_activation(std::size_t d, std::size_t d_down, std::size_t d_up);

}  // namespace hgnn

#endif

#ifndef HGNN_TRAINING_HPP
#define HGNN_TRAINING_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "hgnn/ad.hpp"
#include "hgnn/embedding.hpp"
#include "hgnn/objectives.hpp"
#include "hgnn/propagation.hpp"

namespace hgnn {

// Everything the trainer may touch: activation blocks, output head,
// edge-model parameters, and (optionally) the initial feature matrices.
template <class T>
struct ModelParamsT {
    HgnnParamsT<T> act;
    OutputHeadT<T> head;
    EdgeModelT<T> edge;
    std::vector<Mat<T>> init_features;  // per layer; used with FeatureInit::supplied

    struct Trainable {
        bool features = true;
        bool activations = true;
        bool head = true;
        bool edge_model = false;
    } trainable;
};
using ModelParams = ModelParamsT<double>;

// Visits every parameter scalar in a fixed order; `f(value, trainable)`.
template <class T, class F>
void visit_params(ModelParamsT<T>& p, F&& f) {
    auto visit_mat = [&](Mat<T>& m, bool t) {
        for (T& v : m.data()) f(v, t);
    };
    auto visit_vec = [&](std::vector<T>& v, bool t) {
        for (T& x : v) f(x, t);
    };
    for (Mat<T>& m : p.init_features) visit_mat(m, p.trainable.features);
    for (auto& step : p.act.steps)
        for (ActivationParamsT<T>& a : step) {
            visit_mat(a.w_self, p.trainable.activations);
            visit_mat(a.w_nbr, p.trainable.activations);
            visit_mat(a.w_down, p.trainable.activations);
            visit_mat(a.w_up, p.trainable.activations);
            visit_vec(a.bias, p.trainable.activations);
            visit_mat(a.w_out, p.trainable.activations);
            visit_vec(a.bias_out, p.trainable.activations);
        }
    if (!p.head.identity_transform) {
        visit_mat(p.head.w, p.trainable.head);
        visit_vec(p.head.b, p.trainable.head);
    }
    f(p.edge.mu_dot, p.trainable.edge_model);
    visit_vec(p.edge.mu_wl, p.trainable.edge_model);
    visit_vec(p.edge.mu_wr, p.trainable.edge_model);
    f(p.edge.mu_bias, p.trainable.edge_model);
    f(p.edge.sig_dot, p.trainable.edge_model);
    visit_vec(p.edge.sig_wl, p.trainable.edge_model);
    visit_vec(p.edge.sig_wr, p.trainable.edge_model);
    f(p.edge.sig_bias, p.trainable.edge_model);
}

std::vector<double> flatten_trainable(const ModelParams& p);
void assign_trainable(ModelParams& p, const std::vector<double>& theta);

// Mirror of the double parameters where every trainable scalar is a tape
// leaf; returns the leaf tape indices in flattening order.
std::pair<ModelParamsT<ad::Var>, std::vector<std::uint32_t>> lift_to_tape(const ModelParams& p,
                                                                          ad::Tape& tape);

struct ObjectiveSpec {
    enum class Kind {
        bernoulli_ll,
        gaussian_ll,
        squared_error,
        soft_modularity,
        label_mse,
        label_bce,
        accuracy
    };
    Kind kind = Kind::squared_error;
    PairSet pairs;
    Matrix labels;

    bool maximize() const {
        return kind == Kind::bernoulli_ll || kind == Kind::gaussian_ll ||
               kind == Kind::soft_modularity || kind == Kind::accuracy;
    }
    bool differentiable() const { return kind != Kind::accuracy; }
};

namespace detail {

template <class T>
FeatureStateT<T> supplied_state(const ModelParamsT<T>& mp) {
    FeatureStateT<T> s;
    s.x = mp.init_features;
    s.iteration = 0;
    return s;
}

// Sigmoid-free row normalization of a non-negative score matrix.
template <class T>
Mat<T> normalize_rows(const Mat<T>& y) {
    Mat<T> p(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
        T s = T(1e-12);
        for (std::size_t j = 0; j < y.cols(); ++j) s += y(i, j);
        for (std::size_t j = 0; j < y.cols(); ++j) p(i, j) = y(i, j) / s;
    }
    return p;
}

}  // namespace detail

// Runs propagation and scores the configured objective (raw sense; use
// ObjectiveSpec::maximize() to orient it).
template <class T>
T evaluate_objective(const PreparedStack& ps, const ModelParamsT<T>& mp,
                     const PropagationConfig& cfg, const ObjectiveSpec& spec,
                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    FeatureStateT<T> init;
    const FeatureStateT<T>* init_ptr = nullptr;
    if (cfg.init == FeatureInit::supplied) {
        init = detail::supplied_state(mp);
        init_ptr = &init;
    }
    FeatureStateT<T> state = run(ps, mp.act, cfg, init_ptr);
    const Graph& g0 = ps.stack->layer(0).graph;

    switch (spec.kind) {
        case ObjectiveSpec::Kind::bernoulli_ll:
        case ObjectiveSpec::Kind::gaussian_ll:
        case ObjectiveSpec::Kind::squared_error: {
            Mat<T> y = apply_output_head(state, mp.head);
            if (y.cols() % 2 != 0)
                throw ValidationError("embedding objective needs an even feature dimension");
            const std::size_t d = y.cols() / 2;
            Mat<T> l(y.rows(), d), r(y.rows(), d);
            for (std::size_t i = 0; i < y.rows(); ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    l(i, j) = y(i, j);
                    r(i, j) = y(i, d + j);
                }
            if (spec.kind == ObjectiveSpec::Kind::squared_error)
                return squared_error_objective(g0, l, r, mp.edge, pairs);
            EdgeModelT<T> m = mp.edge;
            if (spec.kind == ObjectiveSpec::Kind::bernoulli_ll) m.kind = EdgeModelKind::Bernoulli;
            return log_likelihood(g0, l, r, m, pairs);
        }
        case ObjectiveSpec::Kind::soft_modularity: {
            Mat<T> y = apply_output_head(state, mp.head);
            return soft_modularity(g0, detail::normalize_rows(y));
        }
        case ObjectiveSpec::Kind::label_mse:
        case ObjectiveSpec::Kind::label_bce: {
            Mat<T> y = apply_output_head(state, mp.head);
            return node_label_loss(y, spec.labels,
                                   spec.kind == ObjectiveSpec::Kind::label_mse
                                       ? LabelLossKind::mse
                                       : LabelLossKind::bce);
        }
        case ObjectiveSpec::Kind::accuracy: {
            if constexpr (std::is_same_v<T, double>) {
                Mat<T> y = apply_output_head(state, mp.head);
                auto argmax_rows = [](const Matrix& m) {
                    std::vector<std::size_t> out(m.rows());
                    for (std::size_t i = 0; i < m.rows(); ++i) {
                        std::size_t best = 0;
                        for (std::size_t j = 1; j < m.cols(); ++j)
                            if (m(i, j) > m(i, best)) best = j;
                        out[i] = best;
                    }
                    return out;
                };
                return classification_accuracy(argmax_rows(y), argmax_rows(spec.labels));
            } else {
                throw ValidationError("accuracy objective is not differentiable");
            }
        }
    }
    throw ValidationError("unknown objective kind");
}

enum class TrainMethod { grad, evolution };

struct TrainConfig {
    TrainMethod method = TrainMethod::grad;
    std::size_t steps = 100;
    double learning_rate = 0.1;
    double lr_decay = 1.0;  // lr_t = learning_rate * lr_decay^t
    double momentum = 0.0;
    std::size_t population = 32;
    double noise_scale = 0.1;
    double elite_fraction = 0.25;
    std::uint64_t seed = 0;
    double tolerance = 0.0;  // convergence threshold on objective delta; 0 = run all steps
    double grad_clip = 10.0;
};

struct TrainReport {
    std::vector<double> trace;
    double final_objective = 0.0;
    bool converged = false;
    double wall_time_ms = 0.0;
};

std::pair<ModelParams, TrainReport> train(const LayerStack& stack, const ModelParams& params,
                                          const PropagationConfig& cfg, const ObjectiveSpec& spec,
                                          const TrainConfig& tcfg);

// Max relative error between reverse-mode and central finite-difference
// gradients over `probes` random trainable coordinates.
double gradient_check(const LayerStack& stack, const ModelParams& params,
                      const PropagationConfig& cfg, const ObjectiveSpec& spec, std::size_t probes,
                      std::uint64_t seed);

}  // namespace hgnn

#endif

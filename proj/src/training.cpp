#include "hgnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace hgnn {

std::vector<double> flatten_trainable(const ModelParams& p) {
    std::vector<double> theta;
    visit_params(const_cast<ModelParams&>(p), [&](double& v, bool trainable) {
        if (trainable) theta.push_back(v);
    });
    return theta;
}

void assign_trainable(ModelParams& p, const std::vector<double>& theta) {
    std::size_t k = 0;
    visit_params(p, [&](double& v, bool trainable) {
        if (trainable) v = theta.at(k++);
    });
    if (k != theta.size()) throw ValidationError("assign_trainable: length mismatch");
}

std::pair<ModelParamsT<ad::Var>, std::vector<std::uint32_t>> lift_to_tape(const ModelParams& p,
                                                                          ad::Tape& tape) {
    // Copy structure, then rewrite scalars. The double model is visited in
    // lockstep with the lifted one so orders match flatten_trainable.
    ModelParamsT<ad::Var> out;
    out.trainable = {p.trainable.features, p.trainable.activations, p.trainable.head,
                     p.trainable.edge_model};

    auto lift_mat = [&](const Matrix& m) {
        Mat<ad::Var> o(m.rows(), m.cols());
        for (std::size_t i = 0; i < m.data().size(); ++i) o.data()[i] = ad::Var(m.data()[i]);
        return o;
    };
    auto lift_vec = [&](const std::vector<double>& v) {
        std::vector<ad::Var> o(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) o[i] = ad::Var(v[i]);
        return o;
    };

    for (const Matrix& m : p.init_features) out.init_features.push_back(lift_mat(m));
    out.act.steps.resize(p.act.steps.size());
    for (std::size_t s = 0; s < p.act.steps.size(); ++s)
        for (const ActivationParams& a : p.act.steps[s]) {
            ActivationParamsT<ad::Var> la;
            la.w_self = lift_mat(a.w_self);
            la.w_nbr = lift_mat(a.w_nbr);
            la.w_down = lift_mat(a.w_down);
            la.w_up = lift_mat(a.w_up);
            la.bias = lift_vec(a.bias);
            la.phi = a.phi;
            la.mlp_hidden = a.mlp_hidden;
            la.w_out = lift_mat(a.w_out);
            la.bias_out = lift_vec(a.bias_out);
            out.act.steps[s].push_back(std::move(la));
        }
    out.head.target = p.head.target;
    out.head.identity_transform = p.head.identity_transform;
    out.head.w = lift_mat(p.head.w);
    out.head.b = lift_vec(p.head.b);
    out.head.phi = p.head.phi;
    out.edge.kind = p.edge.kind;
    out.edge.mu_dot = ad::Var(p.edge.mu_dot);
    out.edge.mu_wl = lift_vec(p.edge.mu_wl);
    out.edge.mu_wr = lift_vec(p.edge.mu_wr);
    out.edge.mu_bias = ad::Var(p.edge.mu_bias);
    out.edge.mu_phi = p.edge.mu_phi;
    out.edge.sig_dot = ad::Var(p.edge.sig_dot);
    out.edge.sig_wl = lift_vec(p.edge.sig_wl);
    out.edge.sig_wr = lift_vec(p.edge.sig_wr);
    out.edge.sig_bias = ad::Var(p.edge.sig_bias);
    out.edge.fixed_sigma = p.edge.fixed_sigma;

    std::vector<std::uint32_t> leaves;
    visit_params(out, [&](ad::Var& v, bool trainable) {
        if (trainable) {
            v = ad::leaf(tape, v.v);
            leaves.push_back(v.idx);
        }
    });
    return {std::move(out), std::move(leaves)};
}

namespace {

double clip_norm(std::vector<double>& g, double max_norm) {
    double n2 = 0.0;
    for (double v : g) n2 += v * v;
    const double n = std::sqrt(n2);
    if (max_norm > 0.0 && n > max_norm) {
        const double s = max_norm / n;
        for (double& v : g) v *= s;
    }
    return n;
}

std::pair<ModelParams, TrainReport> train_grad(
    const PreparedStack& ps, ModelParams params, const PropagationConfig& cfg,
    const ObjectiveSpec& spec, const TrainConfig& tcfg,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    const double sign = spec.maximize() ? 1.0 : -1.0;
    TrainReport report;
    std::vector<double> theta = flatten_trainable(params);
    std::vector<double> velocity(theta.size(), 0.0);

    ModelParams best = params;
    double best_score = sign * evaluate_objective(ps, params, cfg, spec, pairs);
    double prev_obj = sign * best_score;
    double lr = tcfg.learning_rate;

    for (std::size_t step = 0; step < tcfg.steps; ++step) {
        ad::Tape tape;
        auto [lifted, leaves] = lift_to_tape(params, tape);
        ad::Var obj = evaluate_objective(ps, lifted, cfg, spec, pairs);
        if (!std::isfinite(obj.v)) break;  // keep the last finite parameters
        report.trace.push_back(obj.v);

        const std::vector<double> adj = tape.gradient(obj.idx);
        std::vector<double> g(leaves.size());
        for (std::size_t i = 0; i < leaves.size(); ++i) g[i] = sign * adj[leaves[i]];
        clip_norm(g, tcfg.grad_clip);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            velocity[i] = tcfg.momentum * velocity[i] + g[i];
            theta[i] += lr * velocity[i];
        }
        lr *= tcfg.lr_decay;
        assign_trainable(params, theta);

        const double cur = evaluate_objective(ps, params, cfg, spec, pairs);
        if (std::isfinite(cur) && sign * cur > best_score) {
            best_score = sign * cur;
            best = params;
        }
        if (tcfg.tolerance > 0.0 && std::abs(cur - prev_obj) < tcfg.tolerance) {
            report.converged = true;
            prev_obj = cur;
            break;
        }
        prev_obj = cur;
    }
    report.final_objective = sign * best_score;
    return {std::move(best), std::move(report)};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xc2b2ae3d27d4eb4fULL * (b + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    return x;
}

std::pair<ModelParams, TrainReport> train_evolution(
    const PreparedStack& ps, ModelParams params, const PropagationConfig& cfg,
    const ObjectiveSpec& spec, const TrainConfig& tcfg,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    const double sign = spec.maximize() ? 1.0 : -1.0;
    TrainReport report;
    std::vector<double> mean = flatten_trainable(params);
    const std::size_t dim = mean.size();
    const std::size_t lambda = std::max<std::size_t>(2, tcfg.population);
    const std::size_t elite =
        std::max<std::size_t>(1, static_cast<std::size_t>(tcfg.elite_fraction * lambda));

    auto score_of = [&](const std::vector<double>& theta) {
        ModelParams m = params;
        assign_trainable(m, theta);
        double obj;
        try {
            obj = evaluate_objective(ps, m, cfg, spec, pairs);
        } catch (const NumericError&) {
            return -std::numeric_limits<double>::infinity();
        }
        return std::isfinite(obj) ? sign * obj : -std::numeric_limits<double>::infinity();
    };

    std::vector<double> best_theta = mean;
    double best_score = score_of(mean);
    double prev_best = best_score;

    for (std::size_t gen = 0; gen < tcfg.steps; ++gen) {
        std::vector<std::vector<double>> cands(lambda);
        std::vector<double> scores(lambda);
        const std::int64_t lam = static_cast<std::int64_t>(lambda);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t j = 0; j < lam; ++j) {
            std::mt19937_64 rng(mix_seed(tcfg.seed, gen, static_cast<std::uint64_t>(j)));
            std::normal_distribution<double> noise(0.0, tcfg.noise_scale);
            std::vector<double> theta = mean;
            for (std::size_t i = 0; i < dim; ++i) theta[i] += noise(rng);
            scores[static_cast<std::size_t>(j)] = score_of(theta);
            cands[static_cast<std::size_t>(j)] = std::move(theta);
        }
        std::vector<std::size_t> order(lambda);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        if (scores[order[0]] > best_score) {
            best_score = scores[order[0]];
            best_theta = cands[order[0]];
        }
        mean.assign(dim, 0.0);
        for (std::size_t e = 0; e < elite; ++e)
            for (std::size_t i = 0; i < dim; ++i) mean[i] += cands[order[e]][i] / elite;
        report.trace.push_back(sign * best_score);
        if (tcfg.tolerance > 0.0 && std::abs(best_score - prev_best) < tcfg.tolerance &&
            gen > 0) {
            report.converged = true;
            break;
        }
        prev_best = best_score;
    }
    assign_trainable(params, best_theta);
    report.final_objective = sign * best_score;
    return {std::move(params), std::move(report)};
}

}  // namespace

std::pair<ModelParams, TrainReport> train(const LayerStack& stack, const ModelParams& params,
                                          const PropagationConfig& cfg, const ObjectiveSpec& spec,
                                          const TrainConfig& tcfg) {
    if (tcfg.method == TrainMethod::grad && !spec.differentiable())
        throw ValidationError("objective is not differentiable; use the evolution method");
    const auto start = std::chrono::steady_clock::now();
    const PreparedStack ps = prepare(stack, cfg);
    const auto pairs = spec.pairs.materialize(stack.layer(0).graph);

    std::pair<ModelParams, TrainReport> result =
        tcfg.method == TrainMethod::grad
            ? train_grad(ps, params, cfg, spec, tcfg, pairs)
            : train_evolution(ps, params, cfg, spec, tcfg, pairs);
    result.second.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return result;
}

double gradient_check(const LayerStack& stack, const ModelParams& params,
                      const PropagationConfig& cfg, const ObjectiveSpec& spec, std::size_t probes,
                      std::uint64_t seed) {
    if (!spec.differentiable()) throw ValidationError("gradient_check needs a differentiable objective");
    const PreparedStack ps = prepare(stack, cfg);
    const auto pairs = spec.pairs.materialize(stack.layer(0).graph);

    ad::Tape tape;
    auto [lifted, leaves] = lift_to_tape(params, tape);
    ad::Var obj = evaluate_objective(ps, lifted, cfg, spec, pairs);
    const std::vector<double> adj = tape.gradient(obj.idx);

    std::vector<double> theta = flatten_trainable(params);
    if (theta.empty()) throw ValidationError("gradient_check: no trainable parameters");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);

    constexpr double kStep = 1e-5;
    double max_err = 0.0;
    ModelParams work = params;
    for (std::size_t p = 0; p < probes; ++p) {
        const std::size_t i = pick(rng);
        const double saved = theta[i];
        theta[i] = saved + kStep;
        assign_trainable(work, theta);
        const double hi = evaluate_objective(ps, work, cfg, spec, pairs);
        theta[i] = saved - kStep;
        assign_trainable(work, theta);
        const double lo = evaluate_objective(ps, work, cfg, spec, pairs);
        theta[i] = saved;
        const double fd = (hi - lo) / (2.0 * kStep);
        const double g = adj[leaves[i]];
        max_err = std::max(max_err, std::abs(g - fd) / std::max(1.0, std::abs(fd)));
    }
    assign_trainable(work, theta);
    return max_err;
}

}  // namespace hgnn

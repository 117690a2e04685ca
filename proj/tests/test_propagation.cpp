#include <random>

#include "doctest.h"
#include "hgnn/propagation.hpp"
#include "hgnn/reference.hpp"
#include "test_util.hpp"

using namespace hgnn;

namespace {

LayerStack two_level_stack(std::uint64_t seed, std::size_t n = 8) {
    Graph g = testutil::random_graph(n, 0.5, seed);
    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint32_t>(i % 3);
    return LayerStack::build(g, default_node_weights(g), {Partition::discrete(labels, 3)},
                             InterLayerScheme::Averaging);
}

std::vector<ActivationParams> random_params(const LayerStack& stack, std::size_t d,
                                            std::uint64_t seed, Nonlinearity phi) {
    std::vector<ActivationParams> out;
    for (std::size_t h = 0; h < stack.layer_count(); ++h) {
        ActivationParams a = identity_activation(d, h > 0 ? d : 0,
                                                 h + 1 < stack.layer_count() ? d : 0);
        a.phi = phi;
        a.w_self = testutil::random_matrix(d, d, seed + 11 * h, 0.5);
        a.w_nbr = testutil::random_matrix(d, d, seed + 11 * h + 1, 0.5);
        if (!a.w_down.empty()) a.w_down = testutil::random_matrix(d, d, seed + 11 * h + 2, 0.5);
        if (!a.w_up.empty()) a.w_up = testutil::random_matrix(d, d, seed + 11 * h + 3, 0.5);
        for (std::size_t j = 0; j < d; ++j) a.bias[j] = 0.01 * static_cast<double>(j);
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace

TEST_CASE("one-layer step reduces to a flat graph convolution") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const std::size_t n = 5 + s % 6;
        const std::size_t d = 3;
        Graph g = testutil::random_graph(n, 0.5, 900 + s);
        LayerStack stack = LayerStack::build(g, default_node_weights(g), {},
                                             InterLayerScheme::Averaging);
        PropagationConfig cfg;
        const PreparedStack ps = prepare(stack, cfg);

        ActivationParams p = identity_activation(d, 0, 0);
        p.phi = Nonlinearity::tanh_fn;
        p.w_self = testutil::random_matrix(d, d, 1000 + s, 0.7);
        p.w_nbr = testutil::random_matrix(d, d, 2000 + s, 0.7);
        p.bias = {0.1, -0.2, 0.05};

        FeatureState state;
        state.x.push_back(testutil::random_matrix(n, d, 3000 + s));
        FeatureState next = hgnn_step(state, ps, {p});
        const Matrix oracle = testutil::flat_conv_step(g, state.x[0], p);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j)
                CHECK(next.x[0](i, j) == doctest::Approx(oracle(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("openmp step matches the serial reference on multi-level stacks") {
    for (std::uint64_t s = 0; s < 6; ++s) {
        LayerStack stack = two_level_stack(1100 + s, 7 + s % 4);
        PropagationConfig cfg;
        const PreparedStack ps = prepare(stack, cfg);
        const std::size_t d = 4;
        const auto params = random_params(stack, d, 1200 + s, Nonlinearity::tanh_fn);

        FeatureState state;
        for (std::size_t h = 0; h < stack.layer_count(); ++h)
            state.x.push_back(
                testutil::random_matrix(stack.layer(h).graph.size(), d, 1300 + s + h));
        const FeatureState a = hgnn_step(state, ps, params);
        const FeatureState b = reference::hgnn_step_serial(state, ps, params);
        REQUIRE(a.x.size() == b.x.size());
        for (std::size_t h = 0; h < a.x.size(); ++h)
            for (std::size_t i = 0; i < a.x[h].data().size(); ++i)
                CHECK(a.x[h].data()[i] == doctest::Approx(b.x[h].data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("permutation equivariance of a flat step") {
    const std::size_t n = 6, d = 3;
    Graph g = testutil::random_graph(n, 0.6, 21);
    const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};

    std::vector<Triplet> permuted_edges;
    const CsrMatrix& a = g.adjacency();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k)
            permuted_edges.push_back({perm[r], perm[a.entry_col(k)], a.entry_value(k)});
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[perm[i]] = g.node_ids()[i];
    Graph pg = Graph::from_edges(std::move(ids), std::move(permuted_edges));

    ActivationParams p = identity_activation(d, 0, 0);
    p.phi = Nonlinearity::tanh_fn;
    p.w_self = testutil::random_matrix(d, d, 22, 0.5);
    p.w_nbr = testutil::random_matrix(d, d, 23, 0.5);

    const Matrix x = testutil::random_matrix(n, d, 24);
    Matrix px(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) px(perm[i], j) = x(i, j);

    const Matrix y = testutil::flat_conv_step(g, x, p);
    LayerStack stack = LayerStack::build(pg, default_node_weights(pg), {},
                                         InterLayerScheme::Averaging);
    PropagationConfig cfg;
    FeatureState state;
    state.x.push_back(px);
    const FeatureState py = hgnn_step(state, prepare(stack, cfg), {p});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            CHECK(py.x[0](perm[i], j) == doctest::Approx(y(i, j)).epsilon(1e-12));
}

TEST_CASE("run validation and modes") {
    LayerStack stack = two_level_stack(31);
    PropagationConfig cfg;
    const PreparedStack ps = prepare(stack, cfg);
    const auto params = random_params(stack, 3, 32, Nonlinearity::tanh_fn);

    SUBCASE("recurrent wants exactly one parameter set") {
        HgnnParams hp;
        hp.steps = {params, params};
        cfg.mode = PropagationMode::recurrent;
        cfg.iterations = 2;
        CHECK_THROWS_AS(run(ps, hp, cfg), ValidationError);
    }
    SUBCASE("shallow wants one set per iteration") {
        HgnnParams hp;
        hp.steps = {params};
        cfg.mode = PropagationMode::shallow;
        cfg.iterations = 2;
        CHECK_THROWS_AS(run(ps, hp, cfg), ValidationError);
    }
    SUBCASE("shallow with distinct sets differs from recurrent") {
        HgnnParams shallow;
        shallow.steps = {params, random_params(stack, 3, 33, Nonlinearity::tanh_fn)};
        cfg.mode = PropagationMode::shallow;
        cfg.iterations = 2;
        cfg.init = FeatureInit::uniform_random;
        cfg.seed = 5;
        FeatureState a = run(ps, shallow, cfg);

        HgnnParams recurrent;
        recurrent.steps = {params};
        cfg.mode = PropagationMode::recurrent;
        FeatureState b = run(ps, recurrent, cfg);
        CHECK(a.iteration == 2);
        CHECK(b.iteration == 2);
        bool any_diff = false;
        for (std::size_t i = 0; i < a.x[0].data().size(); ++i)
            if (std::abs(a.x[0].data()[i] - b.x[0].data()[i]) > 1e-9) any_diff = true;
        CHECK(any_diff);
    }
    SUBCASE("supplied init requires a state") {
        HgnnParams hp;
        hp.steps = {params};
        cfg.init = FeatureInit::supplied;
        CHECK_THROWS_AS(run(ps, hp, cfg), ValidationError);
    }
    SUBCASE("zeros init with zero bias stays at a fixed point of odd activations") {
        auto zero_bias = params;
        for (auto& p : zero_bias) p.bias.assign(p.bias.size(), 0.0);
        HgnnParams hp;
        hp.steps = {zero_bias};
        cfg.init = FeatureInit::zeros;
        cfg.iterations = 3;
        FeatureState s = run(ps, hp, cfg);
        for (const auto& layer : s.x)
            for (double v : layer.data()) CHECK(v == 0.0);
    }
    SUBCASE("seeded random init is reproducible") {
        HgnnParams hp;
        hp.steps = {params};
        cfg.init = FeatureInit::uniform_random;
        cfg.seed = 77;
        cfg.iterations = 2;
        FeatureState a = run(ps, hp, cfg);
        FeatureState b = run(ps, hp, cfg);
        for (std::size_t h = 0; h < a.x.size(); ++h)
            for (std::size_t i = 0; i < a.x[h].data().size(); ++i)
                CHECK(a.x[h].data()[i] == b.x[h].data()[i]);
    }
}

TEST_CASE("divergence raises a numeric error naming the step") {
    Graph g = testutil::random_graph(5, 0.8, 41);
    LayerStack stack =
        LayerStack::build(g, default_node_weights(g), {}, InterLayerScheme::Averaging);
    PropagationConfig cfg;
    cfg.iterations = 60;
    cfg.init = FeatureInit::uniform_random;
    cfg.seed = 1;
    const PreparedStack ps = prepare(stack, cfg);
    ActivationParams p = identity_activation(2, 0, 0);
    for (auto& v : p.w_self.data()) v *= 1e6;  // explode the recurrence
    HgnnParams hp;
    hp.steps = {{p}};
    CHECK_THROWS_AS(run(ps, hp, cfg), NumericError);
}

TEST_CASE("mlp-widened activation matches the serial reference") {
    LayerStack stack = two_level_stack(51);
    PropagationConfig cfg;
    const PreparedStack ps = prepare(stack, cfg);
    const std::size_t d = 3, hidden = 5;
    std::vector<ActivationParams> params;
    for (std::size_t h = 0; h < stack.layer_count(); ++h) {
        ActivationParams a;
        a.w_self = testutil::random_matrix(d, hidden, 60 + h, 0.4);
        a.w_nbr = testutil::random_matrix(d, hidden, 70 + h, 0.4);
        if (h > 0) a.w_down = testutil::random_matrix(d, hidden, 80 + h, 0.4);
        if (h + 1 < stack.layer_count()) a.w_up = testutil::random_matrix(d, hidden, 90 + h, 0.4);
        a.bias.assign(hidden, 0.1);
        a.phi = Nonlinearity::tanh_fn;
        a.mlp_hidden = hidden;
        a.w_out = testutil::random_matrix(hidden, d, 100 + h, 0.4);
        a.bias_out.assign(d, -0.05);
        params.push_back(std::move(a));
    }
    FeatureState state;
    for (std::size_t h = 0; h < stack.layer_count(); ++h)
        state.x.push_back(testutil::random_matrix(stack.layer(h).graph.size(), d, 110 + h));
    const FeatureState a = hgnn_step(state, ps, params);
    const FeatureState b = reference::hgnn_step_serial(state, ps, params);
    for (std::size_t h = 0; h < a.x.size(); ++h)
        for (std::size_t i = 0; i < a.x[h].data().size(); ++i)
            CHECK(a.x[h].data()[i] == doctest::Approx(b.x[h].data()[i]).epsilon(1e-12));
}

TEST_CASE("output head") {
    FeatureState s;
    s.x.push_back(testutil::random_matrix(4, 2, 120));
    s.x.push_back(testutil::random_matrix(2, 2, 121));

    OutputHead identity;
    const Matrix y0 = apply_output_head(s, identity);
    CHECK(y0.rows() == 4);

    OutputHead top;
    top.target = HeadTarget::top_layer_nodes;
    CHECK(apply_output_head(s, top).rows() == 2);

    OutputHead affine;
    affine.identity_transform = false;
    affine.w = testutil::random_matrix(2, 3, 122);
    affine.b = {0.1, 0.2, 0.3};
    affine.phi = Nonlinearity::sigmoid_fn;
    const Matrix y = apply_output_head(s, affine);
    REQUIRE(y.cols() == 3);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double z = affine.b[j];
            for (std::size_t k = 0; k < 2; ++k) z += s.x[0](i, k) * affine.w(k, j);
            CHECK(y(i, j) == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));
        }

    OutputHead bad;
    bad.identity_transform = false;
    bad.w = testutil::random_matrix(5, 3, 123);
    bad.b = {0, 0, 0};
    CHECK_THROWS_AS(apply_output_head(s, bad), ValidationError);
}

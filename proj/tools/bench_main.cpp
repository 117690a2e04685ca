// Benchmark: OpenMP propagation step vs the serial reference on a planted
// hierarchical graph, plus agreement check between the two kernels.
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>

#include "hgnn/harness.hpp"
#include "hgnn/reference.hpp"
#include "hgnn/synthetic.hpp"

using namespace hgnn;

namespace {

double max_abs_diff(const FeatureState& a, const FeatureState& b) {
    double m = 0.0;
    for (std::size_t h = 0; h < a.x.size(); ++h)
        for (std::size_t i = 0; i < a.x[h].data().size(); ++i)
            m = std::max(m, std::abs(a.x[h].data()[i] - b.x[h].data()[i]));
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n_blocks = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 64;
    const std::size_t d = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 16;
    const std::size_t reps = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 20;

    SyntheticSpec spec;
    spec.generator = SyntheticSpec::Generator::planted_hierarchy;
    spec.levels = 2;
    spec.branching = 4;
    spec.base_block_size = std::max<std::size_t>(1, n_blocks / 16);
    spec.p_in = {0.4, 0.1};
    spec.p_out = 0.02;
    spec.seed = 7;
    const Graph g = generate_synthetic(spec);
    std::cout << "graph: " << g.size() << " nodes, " << g.edge_count() << " edges, feature dim "
              << d << "\n";

    const LayerStack stack = LayerStack::build(g, default_node_weights(g), planted_partitions(spec),
                                               InterLayerScheme::Averaging);
    PropagationConfig cfg;
    cfg.seed = 7;
    const PreparedStack ps = prepare(stack, cfg);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    std::vector<ActivationParams> params;
    for (std::size_t h = 0; h < stack.layer_count(); ++h) {
        ActivationParams a =
            identity_activation(d, h > 0 ? d : 0, h + 1 < stack.layer_count() ? d : 0);
        a.phi = Nonlinearity::tanh_fn;
        for (auto& v : a.w_self.data()) v += dist(rng) * 0.1;
        for (auto& v : a.w_nbr.data()) v += dist(rng) * 0.1;
        for (auto& v : a.w_down.data()) v += dist(rng) * 0.1;
        for (auto& v : a.w_up.data()) v += dist(rng) * 0.1;
        params.push_back(std::move(a));
    }
    FeatureState state;
    for (std::size_t h = 0; h < stack.layer_count(); ++h) {
        Matrix x(stack.layer(h).graph.size(), d);
        for (auto& v : x.data()) v = dist(rng);
        state.x.push_back(std::move(x));
    }

    const FeatureState omp_out = hgnn_step(state, ps, params);
    const FeatureState ser_out = reference::hgnn_step_serial(state, ps, params);
    std::cout << "kernel agreement (max abs diff): " << max_abs_diff(omp_out, ser_out) << "\n";

    using clock = std::chrono::steady_clock;
    auto time_loop = [&](auto&& step) {
        const auto start = clock::now();
        for (std::size_t r = 0; r < reps; ++r) {
            FeatureState s = step();
            volatile double sink = s.x[0](0, 0);
            (void)sink;
        }
        return std::chrono::duration<double, std::milli>(clock::now() - start).count() /
               static_cast<double>(reps);
    };
    const double t_omp = time_loop([&] { return hgnn_step(state, ps, params); });
    const double t_ser = time_loop([&] { return reference::hgnn_step_serial(state, ps, params); });
    std::cout << "openmp step:  " << t_omp << " ms\n";
    std::cout << "serial step:  " << t_ser << " ms\n";
    std::cout << "speedup:      " << t_ser / t_omp << "x\n";
    return 0;
}

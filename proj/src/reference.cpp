#include "hgnn/reference.hpp"

namespace hgnn::reference {

namespace {

// s[a,:] = sum_b op[b,a] * x[b,:] with op given source-major and dense.
Matrix dense_gather(const Matrix& op, const Matrix& x) {
    Matrix s(op.cols(), x.cols());
    for (std::size_t a = 0; a < op.cols(); ++a)
        for (std::size_t b = 0; b < op.rows(); ++b) {
            const double w = op(b, a);
            if (w == 0.0) continue;
            for (std::size_t j = 0; j < x.cols(); ++j) s(a, j) += w * x(b, j);
        }
    return s;
}

double scalar_nonlinearity(Nonlinearity phi, double z) {
    switch (phi) {
        case Nonlinearity::identity: return z;
        case Nonlinearity::tanh_fn: return std::tanh(z);
        case Nonlinearity::sigmoid_fn: return 1.0 / (1.0 + std::exp(-z));
        case Nonlinearity::relu_fn: return z > 0.0 ? z : 0.0;
    }
    return z;
}

}  // namespace

FeatureState hgnn_step_serial(const FeatureState& state, const PreparedStack& ps,
                              const std::vector<ActivationParams>& params) {
    const std::size_t layers = ps.layer_count();
    FeatureState next;
    next.iteration = state.iteration + 1;
    next.x.resize(layers);
    for (std::size_t h = 0; h < layers; ++h) {
        const ActivationParams& p = params[h];
        const std::size_t n = state.x[h].rows();
        const Matrix nbr_src = ps.nbr[h].transposed().to_dense();  // source-major
        const Matrix s_nbr = dense_gather(nbr_src, state.x[h]);
        Matrix s_down, s_up;
        if (h > 0)
            s_down = dense_gather(ps.from_below[h - 1].transposed().to_dense(), state.x[h - 1]);
        if (h + 1 < layers)
            s_up = dense_gather(ps.from_above[h].transposed().to_dense(), state.x[h + 1]);

        const std::size_t m = p.mlp_hidden > 0 ? p.mlp_hidden : p.w_self.cols();
        Matrix hidden(n, m);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t j = 0; j < m; ++j) {
                double z = p.bias[j];
                for (std::size_t k = 0; k < p.w_self.rows(); ++k)
                    z += state.x[h](a, k) * p.w_self(k, j);
                for (std::size_t k = 0; k < p.w_nbr.rows(); ++k) z += s_nbr(a, k) * p.w_nbr(k, j);
                if (!p.w_down.empty())
                    for (std::size_t k = 0; k < p.w_down.rows(); ++k)
                        z += s_down(a, k) * p.w_down(k, j);
                if (!p.w_up.empty())
                    for (std::size_t k = 0; k < p.w_up.rows(); ++k) z += s_up(a, k) * p.w_up(k, j);
                hidden(a, j) = scalar_nonlinearity(p.phi, z);
            }
        if (p.mlp_hidden == 0) {
            next.x[h] = std::move(hidden);
        } else {
            Matrix out(n, p.w_out.cols());
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t j = 0; j < p.w_out.cols(); ++j) {
                    double z = p.bias_out[j];
                    for (std::size_t k = 0; k < m; ++k) z += hidden(a, k) * p.w_out(k, j);
                    out(a, j) = z;
                }
            next.x[h] = std::move(out);
        }
    }
    return next;
}

double squared_error_serial(const Graph& g, const Matrix& l, const Matrix& r,
                            const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    double s = 0.0;
    for (const auto& [a, b] : pairs) {
        double mu = 0.0;
        for (std::size_t k = 0; k < l.cols(); ++k) mu += l(a, k) * r(b, k);
        const double diff = g.weight(a, b) - mu;
        s += diff * diff;
    }
    return s;
}

}  // namespace hgnn::reference

#include "hgnn/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hgnn {

namespace {

CsrMatrix dense_to_csr(const Matrix& m) {
    std::vector<Triplet> ts;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) ts.push_back({i, j, m(i, j)});
    return CsrMatrix::from_triplets(m.rows(), m.cols(), std::move(ts));
}

double norm(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TruncatedSvd truncated_svd(const CsrMatrix& a, std::size_t d, const SvdOptions& opt) {
    if (a.rows() != a.cols()) throw ValidationError("truncated_svd expects a square matrix");
    const std::size_t n = a.rows();
    if (d < 1 || d > n) throw ValidationError("truncated_svd: rank out of range");
    const CsrMatrix at = a.transposed();

    TruncatedSvd out;
    out.u = Matrix(n, d);
    out.v = Matrix(n, d);
    out.sigma.assign(d, 0.0);

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    std::vector<std::vector<double>> vs, us;
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> v(n);
        for (double& x : v) x = dist(rng);
        // Deflated operator: B x = A^T A x - sum_j sigma_j^2 v_j (v_j . x).
        auto apply_b = [&](const std::vector<double>& x) {
            std::vector<double> y = at.apply_vec(a.apply_vec(x));
            for (std::size_t j = 0; j < vs.size(); ++j) {
                const double c = out.sigma[j] * out.sigma[j] * dot(vs[j], x);
                for (std::size_t i = 0; i < n; ++i) y[i] -= c * vs[j][i];
            }
            return y;
        };
        auto orthogonalize = [&](std::vector<double>& x) {
            for (const auto& prev : vs) {
                const double c = dot(prev, x);
                for (std::size_t i = 0; i < n; ++i) x[i] -= c * prev[i];
            }
        };
        orthogonalize(v);
        double nv = norm(v);
        if (nv < 1e-14) {
            // Remaining space exhausted; trailing singular values are zero.
            vs.push_back(std::vector<double>(n, 0.0));
            us.push_back(std::vector<double>(n, 0.0));
            continue;
        }
        for (double& x : v) x /= nv;

        double rayleigh = 0.0;
        bool converged = false;
        for (std::size_t it = 0; it < opt.max_iterations; ++it) {
            std::vector<double> w = apply_b(v);
            const double ray = dot(v, w);
            orthogonalize(w);
            const double nw = norm(w);
            if (nw < 1e-14 || ray < 1e-24) {
                rayleigh = std::max(ray, 0.0);
                converged = true;
                v.assign(n, 0.0);
                break;
            }
            for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
            if (std::abs(ray - rayleigh) <= opt.tolerance * std::max(1.0, std::abs(ray))) {
                rayleigh = ray;
                converged = true;
                break;
            }
            rayleigh = ray;
        }
        if (!converged)
            throw NumericError("truncated_svd: power iteration did not converge");
        if (norm(v) < 0.5) {
            vs.push_back(std::vector<double>(n, 0.0));
            us.push_back(std::vector<double>(n, 0.0));
            continue;
        }
        // u = (A v - deflation) / sigma.
        std::vector<double> u = a.apply_vec(v);
        for (std::size_t j = 0; j < us.size(); ++j) {
            const double c = out.sigma[j] * dot(vs[j], v);
            for (std::size_t i = 0; i < n; ++i) u[i] -= c * us[j][i];
        }
        const double sigma = norm(u);
        if (sigma < 1e-13) {
            vs.push_back(std::vector<double>(n, 0.0));
            us.push_back(std::vector<double>(n, 0.0));
            continue;
        }
        for (double& x : u) x /= sigma;
        // Sign convention: largest-magnitude right entry positive.
        std::size_t arg = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
        if (v[arg] < 0.0)
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = -v[i];
                u[i] = -u[i];
            }
        out.sigma[k] = sigma;
        for (std::size_t i = 0; i < n; ++i) {
            out.u(i, k) = u[i];
            out.v(i, k) = v[i];
        }
        vs.push_back(std::move(v));
        us.push_back(std::move(u));
    }
    return out;
}

EmbeddingResult svd_embedding(const Graph& g, std::size_t d, const SvdOptions& opt) {
    if (d < 1 || d > g.size()) throw ValidationError("svd_embedding: rank out of range");
    TruncatedSvd svd = truncated_svd(g.adjacency(), d, opt);
    EmbeddingResult e;
    e.l = Matrix(g.size(), d);
    e.r = Matrix(g.size(), d);
    for (std::size_t k = 0; k < d; ++k) {
        const double s = std::sqrt(svd.sigma[k]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            e.l(i, k) = svd.u(i, k) * s;
            e.r(i, k) = svd.v(i, k) * s;
        }
    }
    e.model.kind = EdgeModelKind::GaussianFixedSigma;
    e.provenance = EmbeddingProvenance::svd_baseline;
    return e;
}

namespace {

Matrix concat_blocks(const std::vector<const Matrix*>& blocks) {
    std::size_t total = 0;
    for (const Matrix* b : blocks) total += b->cols();
    Matrix out(blocks.front()->rows(), total);
    std::size_t off = 0;
    for (const Matrix* b : blocks) {
        for (std::size_t i = 0; i < b->rows(); ++i)
            for (std::size_t j = 0; j < b->cols(); ++j) out(i, off + j) = (*b)(i, j);
        off += b->cols();
    }
    return out;
}

void split_pairs(const Matrix& assembled, Matrix& l, Matrix& r) {
    if (assembled.cols() % 2 != 0)
        throw ValidationError("assembled embedding has odd dimension, cannot split into (l, r)");
    const std::size_t d = assembled.cols() / 2;
    l = Matrix(assembled.rows(), d);
    r = Matrix(assembled.rows(), d);
    for (std::size_t i = 0; i < assembled.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            l(i, j) = assembled(i, j);
            r(i, j) = assembled(i, d + j);
        }
}

}  // namespace

EmbeddingResult assemble_hierarchical_embedding(const FeatureState& state, const LayerStack& stack,
                                                const AssemblyRule& rule, const EdgeModel& model) {
    if (state.x.size() != stack.layer_count())
        throw ValidationError("assemble: feature state does not match stack");
    std::vector<Matrix> level_blocks;
    level_blocks.push_back(state.x[0]);
    for (std::size_t h : rule.levels) {
        if (h < 1 || h > stack.depth()) throw ValidationError("assemble: level out of range");
        const CsrMatrix down = stack.compose_down(h).transposed();  // |L^0| x |L^h|
        level_blocks.push_back(down.apply(state.x[h]));
    }

    EmbeddingResult e;
    e.model = model;
    e.provenance = EmbeddingProvenance::hgnn;

    if (rule.kind == AssemblyRule::Kind::concatenation) {
        // Pair-preserving concatenation: l takes every block's first half,
        // r every block's second half.
        std::size_t total = 0;
        for (const Matrix& b : level_blocks) {
            if (b.cols() % 2 != 0)
                throw ValidationError("assembled embedding has odd dimension, cannot split into (l, r)");
            total += b.cols() / 2;
        }
        const std::size_t n = level_blocks.front().rows();
        e.l = Matrix(n, total);
        e.r = Matrix(n, total);
        std::size_t off = 0;
        for (const Matrix& b : level_blocks) {
            const std::size_t half = b.cols() / 2;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < half; ++j) {
                    e.l(i, off + j) = b(i, j);
                    e.r(i, off + j) = b(i, half + j);
                }
            off += half;
        }
        return e;
    }

    std::vector<const Matrix*> ptrs;
    for (const Matrix& b : level_blocks) ptrs.push_back(&b);
    const Matrix x = concat_blocks(ptrs);
    Matrix y;
    if (rule.kind == AssemblyRule::Kind::affine) {
        if (rule.w.rows() != x.cols()) throw ValidationError("assemble: affine weight shape mismatch");
        y = matmul_omp(x, rule.w);
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += rule.b[j];
    } else {
        if (rule.w1.rows() != x.cols()) throw ValidationError("assemble: mlp weight shape mismatch");
        Matrix hmat = matmul_omp(x, rule.w1);
        for (std::size_t i = 0; i < hmat.rows(); ++i)
            for (std::size_t j = 0; j < hmat.cols(); ++j)
                hmat(i, j) = std::tanh(hmat(i, j) + rule.b1[j]);
        y = matmul_omp(hmat, rule.w2);
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += rule.b2[j];
    }
    split_pairs(y, e.l, e.r);
    return e;
}

std::vector<double> reconstruct(const EmbeddingResult& e,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::vector<double> out(pairs.size());
    const std::size_t d = e.dim();
    const std::int64_t m = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) {
        const auto& [a, b] = pairs[static_cast<std::size_t>(i)];
        if (e.model.kind == EdgeModelKind::Bernoulli)
            out[static_cast<std::size_t>(i)] = edge_probability(e.model, e.l.row(a), e.r.row(b), d);
        else
            out[static_cast<std::size_t>(i)] = edge_mu(e.model, e.l.row(a), e.r.row(b), d);
    }
    return out;
}

double effective_dimensionality(const LayerStack& stack, const std::vector<std::size_t>& dims) {
    if (dims.size() != stack.layer_count())
        throw ValidationError("effective_dimensionality: dims do not match stack");
    double total = 0.0;
    for (std::size_t h = 0; h < dims.size(); ++h)
        total += static_cast<double>(stack.layer(h).graph.size() * dims[h]);
    return total / static_cast<double>(stack.layer(0).graph.size());
}

double nmse(const Graph& g, const EmbeddingResult& e) {
    const std::size_t n = g.size();
    const std::size_t d = e.dim();
    double denom = 0.0;
    const CsrMatrix& a = g.adjacency();
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k)
            if (a.entry_col(k) != r) denom += a.entry_value(k) * a.entry_value(k);
    if (denom == 0.0) throw ValidationError("nmse: graph has no off-diagonal weight");

    const std::size_t count = n * n;
    double num = detail::blocked_sum<double>(count, [&](std::size_t idx) {
        const std::size_t i = idx / n;
        const std::size_t j = idx % n;
        if (i == j) return 0.0;
        const double w = g.weight(i, j);
        const double what = e.model.kind == EdgeModelKind::Bernoulli
                                ? value(edge_probability(e.model, e.l.row(i), e.r.row(j), d))
                                : value(edge_mu(e.model, e.l.row(i), e.r.row(j), d));
        const double diff = w - what;
        return diff * diff;
    });
    return num / denom;
}

EmbeddingResult hierarchical_svd_embedding(const LayerStack& stack, std::size_t rank0,
                                           const std::vector<std::size_t>& level_ranks,
                                           const SvdOptions& opt) {
    if (level_ranks.size() > stack.depth())
        throw ValidationError("hierarchical_svd_embedding: more ranks than hidden levels");
    const std::size_t n = stack.layer(0).graph.size();
    Matrix residual = stack.layer(0).graph.adjacency().to_dense();

    FeatureState state;
    state.x.resize(stack.layer_count());
    for (std::size_t h = 0; h < stack.layer_count(); ++h)
        state.x[h] = Matrix(stack.layer(h).graph.size(), 0);

    std::vector<std::size_t> included;
    for (std::size_t h = level_ranks.size(); h >= 1; --h) {
        const std::size_t rank = level_ranks[h - 1];
        if (rank == 0) continue;
        included.push_back(h);
        const std::size_t nh = stack.layer(h).graph.size();
        // Composed attachment C^{0..h-1} aggregates the residual for fitting.
        CsrMatrix comp = stack.partitions()[0].matrix();
        for (std::size_t k = 1; k < h; ++k) comp = comp.multiply(stack.partitions()[k].matrix());
        const Matrix comp_d = comp.to_dense();  // n x |L^h|
        const Matrix agg = matmul_omp(transposed(comp_d), matmul_omp(residual, comp_d));

        TruncatedSvd svd = truncated_svd(dense_to_csr(agg), std::min(rank, nh), opt);
        Matrix feat(nh, 2 * svd.sigma.size());
        for (std::size_t k = 0; k < svd.sigma.size(); ++k) {
            const double s = std::sqrt(svd.sigma[k]);
            for (std::size_t i = 0; i < nh; ++i) {
                feat(i, k) = svd.u(i, k) * s;
                feat(i, svd.sigma.size() + k) = svd.v(i, k) * s;
            }
        }
        state.x[h] = feat;

        // Subtract the disaggregated contribution from the residual.
        const Matrix down = stack.compose_down(h).transposed().to_dense();  // n x |L^h|
        Matrix lh(nh, svd.sigma.size()), rh(nh, svd.sigma.size());
        for (std::size_t k = 0; k < svd.sigma.size(); ++k)
            for (std::size_t i = 0; i < nh; ++i) {
                lh(i, k) = feat(i, k);
                rh(i, k) = feat(i, svd.sigma.size() + k);
            }
        const Matrix pl = matmul_omp(down, lh);  // n x rank
        const Matrix pr = matmul_omp(down, rh);
        const Matrix pred = matmul_omp(pl, transposed(pr));
        for (std::size_t i = 0; i < n * n; ++i) residual.data()[i] -= pred.data()[i];
    }

    if (rank0 > 0) {
        TruncatedSvd svd = truncated_svd(dense_to_csr(residual), std::min(rank0, n), opt);
        Matrix feat(n, 2 * svd.sigma.size());
        for (std::size_t k = 0; k < svd.sigma.size(); ++k) {
            const double s = std::sqrt(svd.sigma[k]);
            for (std::size_t i = 0; i < n; ++i) {
                feat(i, k) = svd.u(i, k) * s;
                feat(i, svd.sigma.size() + k) = svd.v(i, k) * s;
            }
        }
        state.x[0] = feat;
    } else {
        state.x[0] = Matrix(n, 0);
    }

    AssemblyRule rule;
    rule.kind = AssemblyRule::Kind::concatenation;
    std::sort(included.begin(), included.end());
    rule.levels = included;
    EdgeModel model;
    model.kind = EdgeModelKind::GaussianFixedSigma;
    EmbeddingResult e = assemble_hierarchical_embedding(state, stack, rule, model);
    e.provenance = EmbeddingProvenance::hgnn;
    return e;
}

}  // namespace hgnn

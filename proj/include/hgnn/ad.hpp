#ifndef HGNN_AD_HPP
#define HGNN_AD_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "hgnn/errors.hpp"

namespace hgnn::ad {

// Minimal scalar reverse-mode tape. Every recorded node has at most two
// parents with precomputed local partials; constants are not recorded.
class Tape {
public:
    static constexpr std::uint32_t kNone = 0xffffffffu;

    struct Node {
        double w0, w1;
        std::uint32_t p0, p1;
    };

    std::uint32_t record(double w0, std::uint32_t p0, double w1, std::uint32_t p1) {
        nodes_.push_back({w0, w1, p0, p1});
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    // Adjoints of every node with respect to the node `root`.
    std::vector<double> gradient(std::uint32_t root) const {
        std::vector<double> adj(nodes_.size(), 0.0);
        if (root == kNone) return adj;
        adj[root] = 1.0;
        for (std::uint32_t i = root + 1; i-- > 0;) {
            const double a = adj[i];
            if (a == 0.0) continue;
            const Node& n = nodes_[i];
            if (n.p0 != kNone) adj[n.p0] += n.w0 * a;
            if (n.p1 != kNone) adj[n.p1] += n.w1 * a;
        }
        return adj;
    }

private:
    std::vector<Node> nodes_;
};

// Dual value: a double plus an optional tape position. Vars constructed
// from plain doubles are constants and never touch the tape.
struct Var {
    double v = 0.0;
    std::uint32_t idx = Tape::kNone;
    Tape* tape = nullptr;

    Var() = default;
    Var(double value) : v(value) {}  // NOLINT: implicit by design
    Var(double value, std::uint32_t i, Tape* t) : v(value), idx(i), tape(t) {}

    bool is_const() const { return tape == nullptr; }
};

inline Var leaf(Tape& t, double value) {
    return Var(value, t.record(0.0, Tape::kNone, 0.0, Tape::kNone), &t);
}

namespace detail {

inline Tape* tape_of(const Var& a, const Var& b) { return a.tape ? a.tape : b.tape; }

inline Var binary(const Var& a, const Var& b, double value, double da, double db) {
    Tape* t = tape_of(a, b);
    if (!t) return Var(value);
    return Var(value, t->record(da, a.idx, db, b.idx), t);
}

inline Var unary(const Var& a, double value, double da) {
    if (!a.tape) return Var(value);
    return Var(value, a.tape->record(da, a.idx, 0.0, Tape::kNone), a.tape);
}

}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
    return detail::binary(a, b, a.v + b.v, 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
    return detail::binary(a, b, a.v - b.v, 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
    return detail::binary(a, b, a.v * b.v, b.v, a.v);
}
inline Var operator/(const Var& a, const Var& b) {
    return detail::binary(a, b, a.v / b.v, 1.0 / b.v, -a.v / (b.v * b.v));
}
inline Var operator-(const Var& a) { return detail::unary(a, -a.v, -1.0); }
inline Var operator+(const Var& a) { return a; }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

inline Var operator*(double a, const Var& b) { return Var(a) * b; }
inline Var operator*(const Var& a, double b) { return a * Var(b); }
inline Var operator+(double a, const Var& b) { return Var(a) + b; }
inline Var operator+(const Var& a, double b) { return a + Var(b); }
inline Var operator-(double a, const Var& b) { return Var(a) - b; }
inline Var operator-(const Var& a, double b) { return a - Var(b); }
inline Var operator/(double a, const Var& b) { return Var(a) / b; }
inline Var operator/(const Var& a, double b) { return a / Var(b); }

inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }

inline Var exp(const Var& a) {
    const double e = std::exp(a.v);
    return detail::unary(a, e, e);
}
inline Var log(const Var& a) { return detail::unary(a, std::log(a.v), 1.0 / a.v); }
inline Var sqrt(const Var& a) {
    const double s = std::sqrt(a.v);
    return detail::unary(a, s, 0.5 / s);
}
inline Var tanh(const Var& a) {
    const double t = std::tanh(a.v);
    return detail::unary(a, t, 1.0 - t * t);
}
inline Var abs(const Var& a) { return detail::unary(a, std::abs(a.v), a.v >= 0.0 ? 1.0 : -1.0); }

inline double value(const Var& a) { return a.v; }
inline double value(double a) { return a; }

inline bool is_finite(const Var& a) { return std::isfinite(a.v); }
inline bool is_finite(double a) { return std::isfinite(a); }

}  // namespace hgnn::ad

#endif

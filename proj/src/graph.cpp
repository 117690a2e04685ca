#include "hgnn/graph.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace hgnn {

Graph Graph::from_edges(std::vector<std::string> node_ids, std::vector<Triplet> edges,
                        bool directed) {
    for (const auto& t : edges) {
        if (t.row >= node_ids.size() || t.col >= node_ids.size())
            throw ValidationError("edge index out of range");
        if (!std::isfinite(t.value)) throw ValidationError("edge weight is not finite");
    }
    Graph g;
    g.node_ids_ = std::move(node_ids);
    g.adj_ = CsrMatrix::from_triplets(g.node_ids_.size(), g.node_ids_.size(), std::move(edges));
    g.directed_ = directed;
    if (!directed) {
        const CsrMatrix t = g.adj_.transposed();
        for (std::size_t r = 0; r < g.adj_.rows(); ++r)
            for (std::size_t k = g.adj_.row_begin(r); k < g.adj_.row_end(r); ++k)
                if (std::abs(g.adj_.entry_value(k) - t.coeff(r, g.adj_.entry_col(k))) > 1e-12)
                    throw ValidationError("undirected graph requires a symmetric edge map");
    }
    return g;
}

bool Graph::has_negative_weights() const {
    for (std::size_t r = 0; r < adj_.rows(); ++r)
        for (std::size_t k = adj_.row_begin(r); k < adj_.row_end(r); ++k)
            if (adj_.entry_value(k) < 0.0) return true;
    return false;
}

namespace {

double parse_weight(const std::string& tok, std::size_t line_no) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "malformed edge weight '" << tok << "' at line " << line_no;
        throw ParseError(msg.str());
    }
    return v;
}

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

Graph load_edge_list(std::istream& in) {
    std::vector<std::string> node_ids;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<Triplet> edges;

    auto intern = [&](const std::string& label) {
        auto it = index.find(label);
        if (it != index.end()) return it->second;
        const std::size_t id = node_ids.size();
        node_ids.push_back(label);
        index.emplace(label, id);
        return id;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) {
            std::ostringstream msg;
            msg << "malformed edge line " << line_no << ": expected src<TAB>dst<TAB>weight";
            throw ParseError(msg.str());
        }
        const std::string src = line.substr(0, t1);
        const std::string dst = line.substr(t1 + 1, t2 - t1 - 1);
        if (src.empty() || dst.empty()) {
            std::ostringstream msg;
            msg << "empty node label at line " << line_no;
            throw ParseError(msg.str());
        }
        const double w = parse_weight(line.substr(t2 + 1), line_no);
        edges.push_back({intern(src), intern(dst), w});
    }
    if (edges.empty()) throw ParseError("empty input: no edges found");
    return Graph::from_edges(std::move(node_ids), std::move(edges));
}

Graph load_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph file: " + path);
    return load_edge_list(in);
}

void write_edge_list(const Graph& g, std::ostream& out) {
    const CsrMatrix& a = g.adjacency();
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k)
            out << g.node_ids()[r] << '\t' << g.node_ids()[a.entry_col(k)] << '\t'
                << format_double(a.entry_value(k)) << '\n';
}

void write_edge_list_file(const Graph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write graph file: " + path);
    write_edge_list(g, out);
}

std::vector<double> degrees(const Graph& g, Direction dir) {
    return dir == Direction::out ? g.adjacency().row_sums() : g.adjacency().col_sums();
}

namespace {

std::vector<double> inv_sqrt_degrees(const Graph& g, Direction dir) {
    std::vector<double> d = degrees(g, dir);
    for (double& x : d) x = x > 0.0 ? 1.0 / std::sqrt(x) : 0.0;
    return d;
}

}  // namespace

CsrMatrix derivative_matrix(const Graph& g, DerivativeMatrixKind kind, DegreeMode mode) {
    const CsrMatrix& a = g.adjacency();
    if (kind == DerivativeMatrixKind::RawAdjacency) return a;

    const Direction left_dir = mode == DegreeMode::in_in ? Direction::in : Direction::out;
    const Direction right_dir = mode == DegreeMode::out_out ? Direction::out : Direction::in;
    const std::vector<double> dl = inv_sqrt_degrees(g, left_dir);
    const std::vector<double> dr = inv_sqrt_degrees(g, right_dir);

    std::vector<Triplet> ts;
    ts.reserve(a.nnz() + (kind == DerivativeMatrixKind::NormalizedLaplacian ? a.rows() : 0));
    const double sign = kind == DerivativeMatrixKind::NormalizedLaplacian ? -1.0 : 1.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k) {
            const std::size_t c = a.entry_col(k);
            ts.push_back({r, c, sign * dl[r] * a.entry_value(k) * dr[c]});
        }
    if (kind == DerivativeMatrixKind::NormalizedLaplacian) {
        const std::vector<double> deg = degrees(g, left_dir);
        for (std::size_t i = 0; i < a.rows(); ++i)
            if (deg[i] != 0.0) ts.push_back({i, i, dl[i] * deg[i] * dr[i]});
    }
    return CsrMatrix::from_triplets(a.rows(), a.cols(), std::move(ts));
}

}  // namespace hgnn

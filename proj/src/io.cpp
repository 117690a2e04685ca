#include "hgnn/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hgnn {

using nlohmann::json;

std::string format_number(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << text;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what());
    }
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("expected a matrix (array of arrays)");
    if (j.empty()) return Matrix();
    Matrix m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i)
        for (std::size_t c = 0; c < j[i].size(); ++c) m(i, c) = j[i][c].get<double>();
    return m;
}

}  // namespace

void write_partition_file(const Partition& p, const std::vector<std::string>& node_ids,
                          const std::string& path) {
    if (node_ids.size() != p.fine_count())
        throw ValidationError("partition write: node label count mismatch");
    json doc;
    doc["nodes"] = node_ids;
    doc["n_groups"] = p.coarse_count();
    if (p.kind() == PartitionKind::discrete) {
        doc["groups"] = p.groups();
    } else {
        json assignments = json::array();
        const CsrMatrix& m = p.matrix();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k)
                row.push_back(json::array({m.entry_col(k), m.entry_value(k)}));
            assignments.push_back(std::move(row));
        }
        doc["assignments"] = assignments;
    }
    write_text_file(path, doc.dump(2) + "\n");
}

Partition read_partition_file(const std::string& path, std::vector<std::string>* node_ids) {
    const json doc = load_json_file(path);
    if (!doc.contains("nodes")) throw ParseError("partition file missing 'nodes'");
    if (node_ids) *node_ids = doc["nodes"].get<std::vector<std::string>>();
    const std::size_t n = doc["nodes"].size();
    const std::size_t n_groups = doc.value("n_groups", std::size_t{0});
    if (doc.contains("groups")) {
        auto groups = doc["groups"].get<std::vector<std::uint32_t>>();
        if (groups.size() != n) throw ParseError("partition 'groups' length mismatch");
        std::size_t k = n_groups;
        for (std::uint32_t g : groups) k = std::max<std::size_t>(k, g + 1);
        return Partition::discrete(groups, k);
    }
    if (!doc.contains("assignments")) throw ParseError("partition file missing assignments");
    const json& assignments = doc["assignments"];
    if (assignments.size() != n) throw ParseError("partition 'assignments' length mismatch");
    std::size_t k = n_groups;
    for (const auto& row : assignments)
        for (const auto& entry : row) k = std::max<std::size_t>(k, entry[0].get<std::size_t>() + 1);
    Matrix c(n, k);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& entry : assignments[i])
            c(i, entry[0].get<std::size_t>()) = entry[1].get<double>();
    return Partition::probabilistic(c);
}

void write_embedding_files(const EmbeddingResult& e, const std::vector<std::string>& node_ids,
                           double effective_dim, const std::string& tsv_path,
                           const std::string& meta_path) {
    if (node_ids.size() != e.l.rows())
        throw ValidationError("embedding write: node label count mismatch");
    std::ostringstream tsv;
    for (std::size_t i = 0; i < e.l.rows(); ++i) {
        tsv << node_ids[i];
        for (std::size_t j = 0; j < e.l.cols(); ++j) tsv << '\t' << format_number(e.l(i, j));
        for (std::size_t j = 0; j < e.r.cols(); ++j) tsv << '\t' << format_number(e.r(i, j));
        tsv << '\n';
    }
    write_text_file(tsv_path, tsv.str());

    json meta;
    meta["d"] = e.dim();
    meta["model"] = e.model.kind == EdgeModelKind::Bernoulli
                        ? "bernoulli"
                        : (e.model.kind == EdgeModelKind::Gaussian ? "gaussian"
                                                                   : "gaussian_fixed_sigma");
    meta["fixed_sigma"] = e.model.fixed_sigma;
    meta["provenance"] = e.provenance == EmbeddingProvenance::svd_baseline
                             ? "svd_baseline"
                             : (e.provenance == EmbeddingProvenance::flat_gnn ? "flat_gnn" : "hgnn");
    meta["effective_dimensionality"] = effective_dim;
    write_text_file(meta_path, meta.dump(2) + "\n");
}

EmbeddingResult read_embedding_file(const std::string& tsv_path,
                                    std::vector<std::string>* node_ids) {
    std::ifstream in(tsv_path);
    if (!in) throw IoError("cannot open embedding file: " + tsv_path);
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string label;
        if (!std::getline(ls, label, '\t')) throw ParseError("bad embedding row");
        labels.push_back(label);
        std::vector<double> vals;
        std::string tok;
        while (std::getline(ls, tok, '\t')) vals.push_back(std::stod(tok));
        if (vals.empty() || vals.size() % 2 != 0) {
            std::ostringstream msg;
            msg << "embedding row " << line_no << " must hold an even number of values";
            throw ParseError(msg.str());
        }
        if (!rows.empty() && vals.size() != rows.front().size())
            throw ParseError("inconsistent embedding dimensions");
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw ParseError("empty embedding file");
    const std::size_t d = rows.front().size() / 2;
    EmbeddingResult e;
    e.l = Matrix(rows.size(), d);
    e.r = Matrix(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            e.l(i, j) = rows[i][j];
            e.r(i, j) = rows[i][d + j];
        }
    if (node_ids) *node_ids = std::move(labels);
    return e;
}

void write_feature_state(const FeatureState& state, const LayerStack& stack,
                         const std::string& path) {
    std::ostringstream out;
    for (std::size_t h = 0; h < state.x.size(); ++h) {
        const auto& ids = stack.layer(h).graph.node_ids();
        for (std::size_t i = 0; i < state.x[h].rows(); ++i) {
            out << h << '\t' << ids[i];
            for (std::size_t j = 0; j < state.x[h].cols(); ++j)
                out << '\t' << format_number(state.x[h](i, j));
            out << '\n';
        }
    }
    write_text_file(path, out.str());
}

namespace {

const char* nonlinearity_name(Nonlinearity n) {
    switch (n) {
        case Nonlinearity::identity: return "identity";
        case Nonlinearity::tanh_fn: return "tanh";
        case Nonlinearity::sigmoid_fn: return "sigmoid";
        case Nonlinearity::relu_fn: return "relu";
    }
    return "identity";
}

json activation_to_json(const ActivationParams& a) {
    json j;
    j["w_self"] = matrix_to_json(a.w_self);
    j["w_nbr"] = matrix_to_json(a.w_nbr);
    j["w_down"] = matrix_to_json(a.w_down);
    j["w_up"] = matrix_to_json(a.w_up);
    j["bias"] = a.bias;
    j["phi"] = nonlinearity_name(a.phi);
    j["mlp_hidden"] = a.mlp_hidden;
    if (a.mlp_hidden > 0) {
        j["w_out"] = matrix_to_json(a.w_out);
        j["bias_out"] = a.bias_out;
    }
    return j;
}

}  // namespace

void write_checkpoint(const ModelParams& params, const PropagationConfig& cfg,
                      const TrainConfig& tcfg, const TrainReport& report,
                      const std::string& path, bool include_timing) {
    json doc;
    json steps = json::array();
    for (const auto& step : params.act.steps) {
        json layers = json::array();
        for (const auto& a : step) layers.push_back(activation_to_json(a));
        steps.push_back(std::move(layers));
    }
    doc["activation_steps"] = steps;
    json feats = json::array();
    for (const Matrix& m : params.init_features) feats.push_back(matrix_to_json(m));
    doc["init_features"] = feats;
    if (!params.head.identity_transform) {
        doc["head"] = {{"w", matrix_to_json(params.head.w)},
                       {"b", params.head.b},
                       {"phi", nonlinearity_name(params.head.phi)},
                       {"target", params.head.target == HeadTarget::layer0_nodes ? "layer0" : "top"}};
    }
    doc["edge_model"] = {{"mu_dot", params.edge.mu_dot},
                         {"mu_bias", params.edge.mu_bias},
                         {"sig_bias", params.edge.sig_bias},
                         {"fixed_sigma", params.edge.fixed_sigma}};
    doc["config"] = {{"iterations", cfg.iterations},
                     {"mode", cfg.mode == PropagationMode::recurrent ? "recurrent" : "shallow"},
                     {"seed", cfg.seed},
                     {"init_range", cfg.init_range}};
    doc["train"] = {{"method", tcfg.method == TrainMethod::grad ? "grad" : "evolution"},
                    {"steps", tcfg.steps},
                    {"seed", tcfg.seed}};
    doc["trace"] = report.trace;
    doc["final_objective"] = report.final_objective;
    doc["converged"] = report.converged;
    if (include_timing) doc["wall_time_ms"] = report.wall_time_ms;
    write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace hgnn

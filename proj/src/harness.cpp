#include "tensometa/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tensometa/common.hpp"

namespace tensometa::harness {
namespace {
constexpr std::string_view kModule = "harness";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace

// Table ----------------------------------------------------------------------

void Table::add_row(std::vector<double> row) {
    if (row.size() != columns.size())
        throw Error(kModule, "table '" + name + "': row has " + std::to_string(row.size()) +
                                 " values for " + std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& col) const {
    const auto it = std::find(columns.begin(), columns.end(), col);
    if (it == columns.end()) throw Error(kModule, "table '" + name + "' has no column '" + col + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> Table::values(const std::string& col) const {
    const std::size_t c = column(col);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

std::vector<double> Table::column_means() const {
    std::vector<double> means(columns.size(), 0.0);
    if (rows.empty()) return means;
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) means[c] += r[c];
    for (auto& m : means) m /= static_cast<double>(rows.size());
    return means;
}

void Table::write_csv(std::ostream& out) const {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << format_double(r[c]);
        out << '\n';
    }
}

// ExperimentResult -----------------------------------------------------------

const Table& ExperimentResult::table(const std::string& name) const {
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw Error(kModule, "result has no table '" + name + "'");
}

double ExperimentResult::metric(const std::string& name) const {
    for (const auto& [k, v] : metrics)
        if (k == name) return v;
    throw Error(kModule, "result has no metric '" + name + "'");
}

bool ExperimentResult::all_checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void ExperimentResult::write_json(std::ostream& out) const {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["kind"] = kind;
    doc["seed"] = seed;
    doc["fingerprint"] = fingerprint;
    doc["version"] = std::string(kVersion);
    ordered_json tabs = ordered_json::object();
    for (const auto& t : tables) {
        ordered_json means = ordered_json::object();
        const auto m = t.column_means();
        for (std::size_t c = 0; c < t.columns.size(); ++c) means[t.columns[c]] = m[c];
        tabs[t.name] = {{"rows", t.rows.size()}, {"mean", means}};
    }
    doc["tables"] = tabs;
    ordered_json mets = ordered_json::object();
    for (const auto& [k, v] : metrics) mets[k] = v;
    doc["metrics"] = mets;
    ordered_json ns = ordered_json::object();
    for (const auto& [k, v] : notes) ns[k] = v;
    doc["notes"] = ns;
    ordered_json cs = ordered_json::array();
    for (const auto& c : checks) cs.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    doc["checks"] = cs;
    out << doc.dump(2) << '\n';
}

// Graphs ---------------------------------------------------------------------

Graph make_graph(std::size_t n, std::vector<qsim::Edge> edges) {
    for (auto& e : edges) {
        if (e.u == e.v) throw Error(kModule, "graph: self loop on vertex " + std::to_string(e.u));
        if (e.u >= n || e.v >= n)
            throw Error(kModule, "graph: edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                                     ") out of range for " + std::to_string(n) + " vertices");
        if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end(),
              [](const qsim::Edge& a, const qsim::Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (edges[i] == edges[i - 1])
            throw Error(kModule, "graph: duplicate edge (" + std::to_string(edges[i].u) + ", " +
                                     std::to_string(edges[i].v) + ")");
    return Graph{n, std::move(edges)};
}

Graph gen_erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(kModule, "gen_erdos_renyi: p must lie in [0, 1]");
    auto rng = make_rng(seed, stream::kGraph);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Graph g{n, {}};
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (unif(rng) < p) g.edges.push_back({u, v});
    return g;
}

std::vector<double> graph_features(const Graph& g, std::size_t length) {
    std::vector<double> hist(g.n, 0.0);
    std::vector<std::size_t> degree(g.n, 0);
    for (const auto& e : g.edges) {
        ++degree[e.u];
        ++degree[e.v];
    }
    for (std::size_t d : degree) hist[d] += 1.0 / static_cast<double>(g.n);
    hist.resize(length, 0.0);
    return hist;
}

std::size_t brute_force_maxcut(const Graph& g) {
    if (g.n > 24) throw Error(kModule, "brute_force_maxcut: limited to 24 vertices");
    if (g.n == 0) return 0;
    std::size_t best = 0;
    // Vertex n-1 stays on side 0; that halves the enumeration.
    const std::uint64_t count = std::uint64_t{1} << (g.n - 1);
    for (std::uint64_t s = 0; s < count; ++s) {
        std::size_t cut = 0;
        for (const auto& e : g.edges) cut += ((s >> e.u) ^ (s >> e.v)) & 1u;
        best = std::max(best, cut);
    }
    return best;
}

Graph read_graph(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::size_t n = 0;
    bool have_n = false;
    std::vector<qsim::Edge> edges;
    auto fail = [&](const std::string& what) {
        throw Error(kModule, "graph line " + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> toks;
        while (ls >> tok) toks.push_back(tok);
        if (toks.empty()) continue;
        auto parse_index = [&](const std::string& s) {
            std::size_t pos = 0;
            unsigned long long v = 0;
            try {
                v = std::stoull(s, &pos);
            } catch (const std::exception&) {
                fail("expected a non-negative integer, got '" + s + "'");
            }
            if (pos != s.size() || s[0] == '-') fail("expected a non-negative integer, got '" + s + "'");
            return static_cast<std::size_t>(v);
        };
        if (!have_n) {
            if (toks.size() != 1) fail("expected the vertex count");
            n = parse_index(toks[0]);
            have_n = true;
            continue;
        }
        if (toks.size() != 2) fail("expected an edge 'u v'");
        const qsim::Edge e{parse_index(toks[0]), parse_index(toks[1])};
        if (e.u >= n || e.v >= n) fail("vertex out of range for " + std::to_string(n) + " vertices");
        if (e.u == e.v) fail("self loop on vertex " + std::to_string(e.u));
        edges.push_back(e);
    }
    if (!have_n) throw Error(kModule, "graph: missing vertex count");
    return make_graph(n, std::move(edges));
}

Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, "cannot open graph file '" + path + "'");
    try {
        return read_graph(in);
    } catch (const Error& e) {
        throw Error(kModule, path + ": " + std::string(e.what()).substr(kModule.size() + 2));
    }
}

void write_graph(std::ostream& out, const Graph& g) {
    out << g.n << '\n';
    for (const auto& e : g.edges) out << e.u << ' ' << e.v << '\n';
}

qsim::Hamiltonian transverse_ising(std::size_t qubits, double coupling, double field) {
    if (qubits == 0) throw Error(kModule, "transverse_ising: need at least one qubit");
    std::vector<qsim::PauliString> terms;
    for (std::size_t k = 0; k + 1 < qubits; ++k) {
        std::string w(qubits, 'I');
        w[k] = w[k + 1] = 'Z';
        terms.push_back({-coupling, w});
    }
    for (std::size_t k = 0; k < qubits; ++k) {
        std::string w(qubits, 'I');
        w[k] = 'X';
        terms.push_back({-field, w});
    }
    return {qubits, std::move(terms)};
}

} // namespace tensometa::harness

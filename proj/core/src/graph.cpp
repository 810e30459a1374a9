#include "fedhc/graph.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedhc/errors.hpp"

namespace fedhc {

namespace {

void check_node(int i, int d, const char* who) {
    if (i < 0 || i >= d)
        throw InvariantViolation(std::string(who) + ": node index " + std::to_string(i) +
                                 " out of range for D=" + std::to_string(d));
}

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

std::string CycleDetected::describe(const std::vector<int>& cycle) {
    std::ostringstream os;
    os << "directed cycle:";
    for (int v : cycle) os << " " << v;
    return os.str();
}

Skeleton::Skeleton(int d) : d_(d), adj_(static_cast<size_t>(d) * d, 0) {
    if (d < 1) throw InvariantViolation("Skeleton needs at least one node");
}

void Skeleton::set_edge(int i, int j, bool present) {
    check_node(i, d_, "Skeleton::set_edge");
    check_node(j, d_, "Skeleton::set_edge");
    if (i == j) throw InvariantViolation("Skeleton::set_edge: self loop");
    adj_[idx(i, j)] = adj_[idx(j, i)] = present ? 1 : 0;
}

int Skeleton::edge_count() const {
    int c = 0;
    for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j) c += has_edge(i, j) ? 1 : 0;
    return c;
}

std::vector<Edge> Skeleton::edges() const {
    std::vector<Edge> out;
    for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j)
            if (has_edge(i, j)) out.emplace_back(i, j);
    return out;
}

std::vector<int> Skeleton::neighbors(int i) const {
    std::vector<int> out;
    for (int j = 0; j < d_; ++j)
        if (j != i && has_edge(i, j)) out.push_back(j);
    return out;
}

Dag::Dag(int d) : d_(d), a_(static_cast<size_t>(d) * d, 0) {
    if (d < 1) throw InvariantViolation("Dag needs at least one node");
}

Dag Dag::from_arrows(int d, const std::vector<Edge>& arrows) {
    Dag g(d);
    for (const auto& [i, j] : arrows) {
        check_node(i, d, "Dag::from_arrows");
        check_node(j, d, "Dag::from_arrows");
        if (i == j) throw InvariantViolation("Dag::from_arrows: self loop");
        if (g.has_arrow(j, i)) throw InvariantViolation("Dag::from_arrows: two-cycle");
        g.add_arrow(i, j);
    }
    topological_order(g);  // throws CycleDetected on a cycle
    return g;
}

void Dag::add_arrow(int i, int j) {
    check_node(i, d_, "Dag::add_arrow");
    check_node(j, d_, "Dag::add_arrow");
    if (i == j) throw InvariantViolation("Dag::add_arrow: self loop");
    a_[idx(i, j)] = 1;
}

void Dag::remove_arrow(int i, int j) { a_[idx(i, j)] = 0; }

int Dag::arrow_count() const {
    int c = 0;
    for (uint8_t b : a_) c += b;
    return c;
}

std::vector<Edge> Dag::arrows() const {
    std::vector<Edge> out;
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            if (has_arrow(i, j)) out.emplace_back(i, j);
    return out;
}

std::vector<int> Dag::parents(int j) const {
    std::vector<int> out;
    for (int i = 0; i < d_; ++i)
        if (has_arrow(i, j)) out.push_back(i);
    return out;
}

std::vector<int> Dag::children(int i) const {
    std::vector<int> out;
    for (int j = 0; j < d_; ++j)
        if (has_arrow(i, j)) out.push_back(j);
    return out;
}

bool Dag::is_acyclic() const {
    try {
        topological_order(*this);
        return true;
    } catch (const CycleDetected&) {
        return false;
    }
}

bool Dag::can_add(int i, int j) const {
    // i->j creates a cycle iff j already reaches i.
    if (i == j) return false;
    std::vector<uint8_t> seen(static_cast<size_t>(d_), 0);
    std::vector<int> stack{j};
    seen[static_cast<size_t>(j)] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (v == i) return false;
        for (int w = 0; w < d_; ++w) {
            if (has_arrow(v, w) && !seen[static_cast<size_t>(w)]) {
                seen[static_cast<size_t>(w)] = 1;
                stack.push_back(w);
            }
        }
    }
    return true;
}

Skeleton Dag::skeleton() const {
    Skeleton s(d_);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            if (has_arrow(i, j)) s.set_edge(i, j, true);
    return s;
}

uint64_t Dag::hash() const {
    // FNV-1a over the arrow bits, 64 bits per block.
    uint64_t h = 1469598103934665603ULL;
    uint64_t block = 0;
    int fill = 0;
    for (uint8_t b : a_) {
        block = (block << 1) | b;
        if (++fill == 64) {
            h ^= block;
            h *= 1099511628211ULL;
            block = 0;
            fill = 0;
        }
    }
    h ^= block;
    h *= 1099511628211ULL;
    return h;
}

EdgeConstraints::EdgeConstraints(std::set<Edge> blacklist, std::set<Edge> whitelist)
    : blacklist_(std::move(blacklist)), whitelist_(std::move(whitelist)) {
    for (const auto& e : whitelist_)
        if (blacklist_.count(e))
            throw InconsistentConstraints("arrow " + std::to_string(e.first) + "->" +
                                          std::to_string(e.second) +
                                          " is both blacklisted and whitelisted");
    // The whitelist on its own must not force a cycle.
    int d = 0;
    for (const auto& [i, j] : whitelist_) d = std::max({d, i + 1, j + 1});
    if (d > 0) {
        Dag g(d);
        for (const auto& [i, j] : whitelist_) {
            if (i == j || g.has_arrow(j, i) || !g.can_add(i, j))
                throw InconsistentConstraints("whitelist arrows force a directed cycle");
            g.add_arrow(i, j);
        }
    }
}

std::vector<int> topological_order(const Dag& dag) {
    const int d = dag.dim();
    std::vector<int> indeg(static_cast<size_t>(d), 0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (dag.has_arrow(i, j)) ++indeg[static_cast<size_t>(j)];

    std::vector<int> order;
    order.reserve(static_cast<size_t>(d));
    std::vector<uint8_t> placed(static_cast<size_t>(d), 0);
    // Kahn's algorithm, always taking the smallest ready index: the empty
    // graph yields the identity permutation and ties are deterministic.
    for (;;) {
        int next = -1;
        for (int v = 0; v < d; ++v) {
            if (!placed[static_cast<size_t>(v)] && indeg[static_cast<size_t>(v)] == 0) {
                next = v;
                break;
            }
        }
        if (next < 0) break;
        placed[static_cast<size_t>(next)] = 1;
        order.push_back(next);
        for (int w = 0; w < d; ++w)
            if (dag.has_arrow(next, w)) --indeg[static_cast<size_t>(w)];
    }
    if (static_cast<int>(order.size()) == d) return order;

    // Every unplaced node keeps an unplaced predecessor, so walking
    // predecessors inside the unplaced set must revisit a node.
    int start = 0;
    while (placed[static_cast<size_t>(start)]) ++start;
    std::vector<int> path;
    std::vector<int> pos(static_cast<size_t>(d), -1);
    int v = start;
    for (;;) {
        if (pos[static_cast<size_t>(v)] >= 0) {
            std::vector<int> cycle(path.begin() + pos[static_cast<size_t>(v)], path.end());
            cycle.push_back(v);
            std::reverse(cycle.begin(), cycle.end());  // present in arrow direction
            throw CycleDetected(std::move(cycle));
        }
        pos[static_cast<size_t>(v)] = static_cast<int>(path.size());
        path.push_back(v);
        int prev = -1;
        for (int w = 0; w < d; ++w) {
            if (dag.has_arrow(w, v) && !placed[static_cast<size_t>(w)]) {
                prev = w;
                break;
            }
        }
        if (prev < 0)
            throw InvariantViolation("cycle search lost its trail");  // unreachable
        v = prev;
    }
}

namespace {

std::string render_dot(const std::vector<std::string>& names, const std::vector<Edge>& directed,
                       const std::vector<Edge>& undirected) {
    const bool as_digraph = !directed.empty();
    std::ostringstream os;
    os << (as_digraph ? "digraph" : "graph") << " g {\n";
    for (const auto& name : names) os << "  \"" << dot_escape(name) << "\";\n";
    std::vector<std::pair<Edge, bool>> all;  // (edge, is_directed)
    for (const auto& e : directed) all.push_back({e, true});
    for (const auto& e : undirected) all.push_back({e, false});
    std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
        const auto key = [&](const std::pair<Edge, bool>& p) {
            return std::tuple(names[static_cast<size_t>(p.first.first)],
                              names[static_cast<size_t>(p.first.second)]);
        };
        return key(a) < key(b);
    });
    for (const auto& [e, dir] : all) {
        os << "  \"" << dot_escape(names[static_cast<size_t>(e.first)]) << "\" "
           << (as_digraph ? "->" : "--") << " \""
           << dot_escape(names[static_cast<size_t>(e.second)]) << "\"";
        if (as_digraph && !dir) os << " [dir=none]";
        os << ";\n";
    }
    os << "}\n";
    return os.str();
}

std::string render_json(const std::vector<std::string>& names, const std::vector<Edge>& directed,
                        const std::vector<Edge>& undirected) {
    nlohmann::ordered_json j;
    j["nodes"] = names;
    j["directed"] = nlohmann::json::array();
    for (const auto& [a, b] : directed) j["directed"].push_back({a, b});
    j["undirected"] = nlohmann::json::array();
    for (const auto& [a, b] : undirected) j["undirected"].push_back({a, b});
    return j.dump(2) + "\n";
}

void check_names(size_t names_size, int d, const char* who) {
    if (static_cast<int>(names_size) != d)
        throw InputError(std::string(who) + ": got " + std::to_string(names_size) +
                         " names for " + std::to_string(d) + " nodes");
}

}  // namespace

std::string graph_to_dot(const Skeleton& g, const std::vector<std::string>& names) {
    check_names(names.size(), g.dim(), "graph_to_dot");
    return render_dot(names, {}, g.edges());
}

std::string graph_to_dot(const Dag& g, const std::vector<std::string>& names) {
    check_names(names.size(), g.dim(), "graph_to_dot");
    return render_dot(names, g.arrows(), {});
}

std::string graph_to_dot(const Cpdag& g, const std::vector<std::string>& names) {
    check_names(names.size(), g.d, "graph_to_dot");
    return render_dot(names, {g.directed.begin(), g.directed.end()},
                      {g.undirected.begin(), g.undirected.end()});
}

std::string graph_to_json(const Skeleton& g, const std::vector<std::string>& names) {
    check_names(names.size(), g.dim(), "graph_to_json");
    return render_json(names, {}, g.edges());
}

std::string graph_to_json(const Dag& g, const std::vector<std::string>& names) {
    check_names(names.size(), g.dim(), "graph_to_json");
    return render_json(names, g.arrows(), {});
}

std::string graph_to_json(const Cpdag& g, const std::vector<std::string>& names) {
    check_names(names.size(), g.d, "graph_to_json");
    return render_json(names, {g.directed.begin(), g.directed.end()},
                       {g.undirected.begin(), g.undirected.end()});
}

ParsedGraph graph_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad graph JSON: ") + e.what());
    }
    ParsedGraph out;
    if (!j.contains("nodes") || !j["nodes"].is_array())
        throw InputError("graph JSON lacks a \"nodes\" array");
    out.nodes = j["nodes"].get<std::vector<std::string>>();
    const int d = static_cast<int>(out.nodes.size());
    auto read_edges = [&](const char* key) {
        std::vector<Edge> edges;
        if (!j.contains(key)) return edges;
        for (const auto& e : j[key]) {
            if (!e.is_array() || e.size() != 2)
                throw InputError(std::string("graph JSON: malformed entry in ") + key);
            const int a = e[0].get<int>(), b = e[1].get<int>();
            if (a < 0 || a >= d || b < 0 || b >= d)
                throw InputError(std::string("graph JSON: node index out of range in ") + key);
            edges.emplace_back(a, b);
        }
        return edges;
    };
    out.directed = read_edges("directed");
    out.undirected = read_edges("undirected");
    return out;
}

}  // namespace fedhc

#ifndef FEDHC_GRAPH_HPP
#define FEDHC_GRAPH_HPP

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fedhc {

using Edge = std::pair<int, int>;

// Undirected graph over D nodes as a dense symmetric bit matrix.
class Skeleton {
public:
    explicit Skeleton(int d);

    int dim() const { return d_; }
    bool has_edge(int i, int j) const { return adj_[idx(i, j)] != 0; }
    void set_edge(int i, int j, bool present);
    int edge_count() const;
    std::vector<Edge> edges() const;  // (min,max) pairs, sorted
    std::vector<int> neighbors(int i) const;

    bool operator==(const Skeleton& other) const { return adj_ == other.adj_; }

private:
    size_t idx(int i, int j) const { return static_cast<size_t>(i) * static_cast<size_t>(d_) + j; }
    int d_;
    std::vector<uint8_t> adj_;
};

// Directed graph over D nodes; arrows[i][j]=1 means i -> j. Mutations do not
// re-check acyclicity (search algorithms maintain it); use is_acyclic() or
// topological_order() to verify.
class Dag {
public:
    explicit Dag(int d);
    static Dag from_arrows(int d, const std::vector<Edge>& arrows);  // validates

    int dim() const { return d_; }
    bool has_arrow(int i, int j) const { return a_[idx(i, j)] != 0; }
    void add_arrow(int i, int j);
    void remove_arrow(int i, int j);
    int arrow_count() const;
    std::vector<Edge> arrows() const;  // sorted (from,to)
    std::vector<int> parents(int j) const;
    std::vector<int> children(int i) const;
    bool is_acyclic() const;
    // True when adding i->j (on top of the current arrows) keeps the graph acyclic.
    bool can_add(int i, int j) const;
    Skeleton skeleton() const;
    uint64_t hash() const;

    bool operator==(const Dag& other) const { return a_ == other.a_; }

private:
    size_t idx(int i, int j) const { return static_cast<size_t>(i) * static_cast<size_t>(d_) + j; }
    int d_;
    std::vector<uint8_t> a_;
};

// Markov-equivalence-class representative: compelled arrows plus reversible
// (undirected) edges. Directed pairs are ordered; undirected stored as (min,max).
struct Cpdag {
    int d = 0;
    std::set<Edge> directed;
    std::set<Edge> undirected;

    bool operator==(const Cpdag& other) const = default;
};

// Forbidden and required arrow sets for the scoring phase.
class EdgeConstraints {
public:
    EdgeConstraints() = default;
    EdgeConstraints(std::set<Edge> blacklist, std::set<Edge> whitelist);

    const std::set<Edge>& blacklist() const { return blacklist_; }
    const std::set<Edge>& whitelist() const { return whitelist_; }
    bool forbids(int i, int j) const { return blacklist_.count({i, j}) != 0; }
    bool requires_arrow(int i, int j) const { return whitelist_.count({i, j}) != 0; }
    bool empty() const { return blacklist_.empty() && whitelist_.empty(); }

private:
    std::set<Edge> blacklist_;
    std::set<Edge> whitelist_;
};

// Permutation of 0..D-1 with every arrow pointing from earlier to later.
// Throws CycleDetected (with one witnessed cycle) when none exists.
std::vector<int> topological_order(const Dag& dag);

// Deterministic DOT text. Skeletons and fully undirected CPDAGs render as
// `graph` blocks with `--` edges; DAGs and mixed CPDAGs render as `digraph`
// blocks where reversible CPDAG edges carry [dir=none]. Edges are emitted in
// sorted order.
std::string graph_to_dot(const Skeleton& g, const std::vector<std::string>& names);
std::string graph_to_dot(const Dag& g, const std::vector<std::string>& names);
std::string graph_to_dot(const Cpdag& g, const std::vector<std::string>& names);

// JSON graph format: {"nodes":[...], "directed":[[from,to],...],
// "undirected":[[a,b],...]} with integer node indices.
std::string graph_to_json(const Skeleton& g, const std::vector<std::string>& names);
std::string graph_to_json(const Dag& g, const std::vector<std::string>& names);
std::string graph_to_json(const Cpdag& g, const std::vector<std::string>& names);

struct ParsedGraph {
    std::vector<std::string> nodes;
    std::vector<Edge> directed;
    std::vector<Edge> undirected;
};
ParsedGraph graph_from_json(const std::string& text);

}  // namespace fedhc

#endif

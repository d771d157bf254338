#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <ostream>
#include <utility>
#include <vector>

#include "prefarb/errors.hpp"
#include "prefarb/market_data.hpp"
#include "prefarb/potential_method.hpp"

namespace prefarb {

// Directed edge `from -> to`: `from` is preferred over `to` by `weight` > 0.
struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    double weight = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct PreferenceGraph {
    std::size_t n = 0;
    std::vector<Edge> edges;
    UtilityVector utilities;

    std::vector<std::size_t> in_degree() const {
        std::vector<std::size_t> d(n, 0);
        for (const auto& e : edges) ++d[e.to];
        return d;
    }

    std::vector<std::size_t> out_degree() const {
        std::vector<std::size_t> d(n, 0);
        for (const auto& e : edges) ++d[e.from];
        return d;
    }
};

enum class VertexRole { source, sink, isolated, intermediate };

inline std::vector<VertexRole> classify_vertices(const PreferenceGraph& g) {
    const auto din = g.in_degree();
    const auto dout = g.out_degree();
    std::vector<VertexRole> roles(g.n);
    for (std::size_t v = 0; v < g.n; ++v) {
        if (din[v] == 0 && dout[v] == 0) {
            roles[v] = VertexRole::isolated;
        } else if (din[v] == 0) {
            roles[v] = VertexRole::source;
        } else if (dout[v] == 0) {
            roles[v] = VertexRole::sink;
        } else {
            roles[v] = VertexRole::intermediate;
        }
    }
    return roles;
}

inline constexpr double kConsistencyTolerance = 1e-9;

// One edge per pair with rho*(i, j) != 0, pointing from the preferred security.
inline PreferenceGraph build_graph(const ConsistentPreferences& prefs,
                                   const UtilityVector& utilities) {
    const std::size_t n = prefs.rho_star.size();
    if (utilities.size() != n) throw ConsistencyError("preferences and utilities differ in size");
    PreferenceGraph g{n, {}, utilities};
    const auto values = prefs.rho_star.values();
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            const double w = values[k];
            if (std::abs(w - (utilities[i] - utilities[j])) > kConsistencyTolerance) {
                throw ConsistencyError("preference (" + std::to_string(i) + "," +
                                       std::to_string(j) + ") is not a utility difference");
            }
            if (w > 0.0) {
                g.edges.push_back({i, j, w});
            } else if (w < 0.0) {
                g.edges.push_back({j, i, -w});
            }
        }
    }
    return g;
}

// Keeps edges with weight >= kappa.
inline PreferenceGraph threshold_edges(const PreferenceGraph& g, double kappa) {
    if (!(kappa >= 0.0)) throw ConfigError("threshold must be non-negative");
    PreferenceGraph out{g.n, {}, g.utilities};
    std::copy_if(g.edges.begin(), g.edges.end(), std::back_inserter(out.edges),
                 [kappa](const Edge& e) { return e.weight >= kappa; });
    return out;
}

/**
 * Which edges survive vertex pruning.
 *
 * source_to_sink keeps an edge iff its tail is a source and its head is a
 * sink, which leaves a bipartite graph. tail_degree keeps an edge iff its tail
 * has zero in-degree or zero out-degree, a one-sided degree test; it exists
 * for comparison only.
 */
enum class PruneRule { source_to_sink, tail_degree };

inline PreferenceGraph prune_intermediate(const PreferenceGraph& g,
                                          PruneRule rule = PruneRule::source_to_sink) {
    const auto roles = classify_vertices(g);
    const auto din = g.in_degree();
    const auto dout = g.out_degree();
    PreferenceGraph out{g.n, {}, g.utilities};
    for (const auto& e : g.edges) {
        const bool keep =
            rule == PruneRule::source_to_sink
                ? roles[e.from] == VertexRole::source && roles[e.to] == VertexRole::sink
                : din[e.from] == 0 || dout[e.from] == 0;
        if (keep) out.edges.push_back(e);
    }
    return out;
}

struct TradeSignalSet {
    std::vector<std::size_t> longs;   // ascending index
    std::vector<std::size_t> shorts;  // ascending index
    // Sign of rho*(i, j) for kept pairs i < j with a surviving edge.
    std::map<std::pair<std::size_t, std::size_t>, int> relation;

    bool empty() const noexcept { return longs.empty() && shorts.empty(); }
};

/**
 * Keeps the n_top sources with the highest utility and the m_bottom sinks with
 * the lowest. Ties go to the lower index. Isolated vertices are never picked.
 */
inline TradeSignalSet select_vertices(const PreferenceGraph& g, std::size_t n_top,
                                      std::size_t m_bottom) {
    const auto roles = classify_vertices(g);
    std::vector<std::size_t> sources, sinks;
    for (std::size_t v = 0; v < g.n; ++v) {
        if (roles[v] == VertexRole::source) sources.push_back(v);
        if (roles[v] == VertexRole::sink) sinks.push_back(v);
    }
    const auto& u = g.utilities;
    std::stable_sort(sources.begin(), sources.end(),
                     [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    std::stable_sort(sinks.begin(), sinks.end(),
                     [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
    sources.resize(std::min(sources.size(), n_top));
    sinks.resize(std::min(sinks.size(), m_bottom));

    TradeSignalSet out;
    out.longs = std::move(sources);
    out.shorts = std::move(sinks);
    std::sort(out.longs.begin(), out.longs.end());
    std::sort(out.shorts.begin(), out.shorts.end());

    std::vector<bool> kept(g.n, false);
    for (auto v : out.longs) kept[v] = true;
    for (auto v : out.shorts) kept[v] = true;
    for (const auto& e : g.edges) {
        if (!kept[e.from] || !kept[e.to]) continue;
        if (e.from < e.to) {
            out.relation[{e.from, e.to}] = 1;
        } else {
            out.relation[{e.to, e.from}] = -1;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structural checks of the preference-relation axioms on a graph.

// Sign relation M(i, j) in {-1, 0, 1} as a dense n x n matrix.
inline std::vector<int> sign_relation(const PreferenceGraph& g) {
    std::vector<int> m(g.n * g.n, 0);
    for (const auto& e : g.edges) {
        m[e.from * g.n + e.to] += 1;
        m[e.to * g.n + e.from] -= 1;
    }
    return m;
}

inline bool is_irreflexive(const PreferenceGraph& g) {
    return std::none_of(g.edges.begin(), g.edges.end(),
                        [](const Edge& e) { return e.from == e.to; });
}

// At most one directed edge per unordered pair, and positive weights.
inline bool is_asymmetric(const PreferenceGraph& g) {
    std::vector<unsigned char> seen(g.n * g.n, 0);
    for (const auto& e : g.edges) {
        if (!(e.weight > 0.0)) return false;
        const auto lo = std::min(e.from, e.to);
        const auto hi = std::max(e.from, e.to);
        if (seen[lo * g.n + hi]++) return false;
    }
    return true;
}

inline bool is_acyclic(const PreferenceGraph& g) {
    auto din = g.in_degree();
    std::vector<std::vector<std::size_t>> adj(g.n);
    for (const auto& e : g.edges) adj[e.from].push_back(e.to);
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < g.n; ++v) {
        if (din[v] == 0) ready.push_back(v);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto v = ready.back();
        ready.pop_back();
        ++visited;
        for (auto w : adj[v]) {
            if (--din[w] == 0) ready.push_back(w);
        }
    }
    return visited == g.n;
}

// M(i,j) = 1 and M(j,k) = 1 imply M(i,k) = 1, checked over all triples.
inline bool is_transitive(const PreferenceGraph& g) {
    const auto m = sign_relation(g);
    const std::size_t n = g.n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (m[i * n + j] != 1) continue;
            for (std::size_t k = 0; k < n; ++k) {
                if (m[j * n + k] == 1 && m[i * n + k] != 1) return false;
            }
        }
    }
    return true;
}

// Weaker form: when i->j and j->k exist and i,k are joined, the edge is i->k.
inline bool is_sign_transitive(const PreferenceGraph& g) {
    const auto m = sign_relation(g);
    const std::size_t n = g.n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (m[i * n + j] != 1) continue;
            for (std::size_t k = 0; k < n; ++k) {
                if (m[j * n + k] == 1 && m[i * n + k] == -1) return false;
            }
        }
    }
    return true;
}

// No vertex has both incoming and outgoing edges.
inline bool is_source_sink_bipartite(const PreferenceGraph& g) {
    const auto roles = classify_vertices(g);
    return std::none_of(roles.begin(), roles.end(),
                        [](VertexRole r) { return r == VertexRole::intermediate; });
}

// Debug dumps: `from,to,weight` edge list and `security,utility` table.
inline void write_edges_csv(const PreferenceGraph& g, const std::vector<std::string>& names,
                            std::ostream& out) {
    out << "from,to,weight\n";
    for (const auto& e : g.edges) {
        out << names.at(e.from) << ',' << names.at(e.to) << ','
            << detail::format_double(e.weight) << '\n';
    }
}

inline void write_utilities_csv(const UtilityVector& u, const std::vector<std::string>& names,
                                std::ostream& out) {
    out << "security,utility\n";
    for (std::size_t i = 0; i < u.size(); ++i) {
        out << names.at(i) << ',' << detail::format_double(u[i]) << '\n';
    }
}

}  // namespace prefarb

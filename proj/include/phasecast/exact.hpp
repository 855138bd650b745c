#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "phasecast/bitset.hpp"
#include "phasecast/budget_split.hpp"
#include "phasecast/errors.hpp"
#include "phasecast/graph.hpp"
#include "phasecast/live_graph.hpp"

namespace phasecast {

/// Guard rails for brute-force enumeration.
struct EnumerationLimit {
    int max_edges = 20;                 // enumerate up to 2^max_edges live graphs
    std::int64_t max_seed_subsets = 100000;  // cap on C(n, budget)

    void check_edges(EdgeId m) const {
        if (m > max_edges)
            throw RefusalError("exact enumeration refused: " + std::to_string(m) +
                               " edges exceeds the limit of " + std::to_string(max_edges));
    }
};

namespace detail {

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r < 0) return std::numeric_limits<std::int64_t>::max();  // overflow guard
    }
    return r;
}

/// Reachability closure of `seeds` in the live graph selected by edge mask.
inline Bitset reach_under_mask(const WeightedDigraph& g, std::uint32_t mask,
                               std::span<const NodeId> seeds) {
    Bitset vis(static_cast<std::size_t>(g.node_count()));
    std::vector<NodeId> queue;
    for (NodeId s : seeds) {
        if (!vis.test(static_cast<std::size_t>(s))) {
            vis.set(static_cast<std::size_t>(s));
            queue.push_back(s);
        }
    }
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        for (auto oe : g.out_edges(queue[qi])) {
            if (!((mask >> oe.edge) & 1u)) continue;
            if (!vis.test(static_cast<std::size_t>(oe.dst))) {
                vis.set(static_cast<std::size_t>(oe.dst));
                queue.push_back(oe.dst);
            }
        }
    }
    return vis;
}

inline long double mask_probability(const WeightedDigraph& g, std::uint32_t mask) {
    long double pr = 1.0L;
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        double p = g.edge(e).prob;
        pr *= ((mask >> e) & 1u) ? p : (1.0 - p);
    }
    return pr;
}

}  // namespace detail

/// Exact expected spread: sum over all 2^m live graphs of
/// Pr(L) * |reach_L(seeds)|.
inline double exact_spread(const WeightedDigraph& g, std::span<const NodeId> seeds,
                           const EnumerationLimit& lim = {}) {
    lim.check_edges(g.edge_count());
    if (!g.fully_weighted()) throw ValidationError("graph has unassigned edge probabilities");
    const std::uint32_t masks = 1u << g.edge_count();
    long double total = 0.0L;
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
        long double pr = detail::mask_probability(g, mask);
        if (pr == 0.0L) continue;
        total += pr * static_cast<long double>(detail::reach_under_mask(g, mask, seeds).count());
    }
    return static_cast<double>(total);
}

/// Sum of live-graph probabilities; equals 1 up to rounding. Test hook.
inline double exact_probability_mass(const WeightedDigraph& g, const EnumerationLimit& lim = {}) {
    lim.check_edges(g.edge_count());
    const std::uint32_t masks = 1u << g.edge_count();
    long double total = 0.0L;
    for (std::uint32_t mask = 0; mask < masks; ++mask)
        total += detail::mask_probability(g, mask);
    return static_cast<double>(total);
}

struct ExactSeedResult {
    std::vector<NodeId> seeds;  // ascending node ids
    double value = 0.0;
};

/// Exhaustive argmax of exact_spread over all budget-sized subsets;
/// lexicographically smallest subset wins ties.
inline ExactSeedResult exact_optimal_seeds(const WeightedDigraph& g, int budget,
                                           const EnumerationLimit& lim = {}) {
    if (budget < 0) throw ValidationError("budget must be non-negative");
    lim.check_edges(g.edge_count());
    const int n = g.node_count();
    budget = std::min(budget, n);
    if (detail::binomial(n, budget) > lim.max_seed_subsets)
        throw RefusalError("exact seed search refused: C(" + std::to_string(n) + "," +
                           std::to_string(budget) + ") exceeds the subset limit");
    ExactSeedResult best;
    if (budget == 0) return best;

    std::vector<NodeId> pick(static_cast<std::size_t>(budget));
    for (int i = 0; i < budget; ++i) pick[static_cast<std::size_t>(i)] = i;
    bool first = true;
    for (;;) {
        double v = exact_spread(g, pick, lim);
        if (first || v > best.value) {  // strict: keeps the lexicographically first argmax
            best.seeds = pick;
            best.value = v;
            first = false;
        }
        // next combination in lexicographic order
        int i = budget - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - budget + i) --i;
        if (i < 0) break;
        ++pick[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < budget; ++j)
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    return best;
}

namespace detail {

/// Induced residual instance on the uninfluenced nodes. Edges incident to
/// influenced nodes are dropped: edges out of influenced nodes already spent
/// their one coin (tails stay tails), and edges into influenced nodes no
/// longer matter. Edges among uninfluenced nodes keep their original
/// probabilities — those coins were never flipped.
inline WeightedDigraph residual_instance(const WeightedDigraph& g, const Bitset& influenced) {
    std::vector<NodeId> remap(static_cast<std::size_t>(g.node_count()), -1);
    NodeId next = 0;
    for (NodeId v = 0; v < g.node_count(); ++v)
        if (!influenced.test(static_cast<std::size_t>(v))) remap[static_cast<std::size_t>(v)] = next++;
    std::vector<Edge> edges;
    for (const auto& e : g.edges()) {
        NodeId s = remap[static_cast<std::size_t>(e.src)];
        NodeId d = remap[static_cast<std::size_t>(e.dst)];
        if (s >= 0 && d >= 0) edges.push_back({s, d, e.prob});
    }
    return WeightedDigraph::from_edges(next, std::move(edges));
}

inline double exact_myopic_recurse(const WeightedDigraph& g, std::span<const int> alloc,
                                   int surplus, const EnumerationLimit& lim) {
    if (alloc.empty()) return 0.0;
    const bool terminal = alloc.size() == 1;
    int want = alloc[0] + (terminal ? surplus : 0);
    int budget = std::min(want, static_cast<int>(g.node_count()));
    int new_surplus = surplus + alloc[0] - budget;

    ExactSeedResult phase = exact_optimal_seeds(g, budget, lim);
    if (terminal || g.node_count() == 0) return phase.value;

    // Group live graphs by the influenced set they produce; the myopic policy
    // observes only that set, so states with equal sets share one decision.
    const std::uint32_t masks = 1u << g.edge_count();
    std::map<Bitset, long double> groups;
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
        long double pr = mask_probability(g, mask);
        if (pr == 0.0L) continue;
        groups[reach_under_mask(g, mask, phase.seeds)] += pr;
    }
    long double total = 0.0L;
    for (const auto& [influenced, pr] : groups) {
        WeightedDigraph residual = residual_instance(g, influenced);
        double rest = exact_myopic_recurse(residual, alloc.subspan(1), new_surplus, lim);
        total += pr * (static_cast<long double>(influenced.count()) + rest);
    }
    return static_cast<double>(total);
}

}  // namespace detail

/// Value of the myopic multiphase policy computed by full enumeration:
/// phase seeds come from exact_optimal_seeds on the current instance, states
/// are grouped by influenced set, and each group recurses on its residual
/// instance. Unused budget rolls into the terminal phase.
inline double exact_myopic_value(const WeightedDigraph& g, const BudgetSplit& split,
                                 const EnumerationLimit& lim = {}) {
    if (split.phases() < 1) throw ValidationError("budget split needs at least one phase");
    for (int a : split.allocations)
        if (a < 0) throw ValidationError("budget split has a negative allocation");
    return detail::exact_myopic_recurse(g, split.allocations, 0, lim);
}

struct EnsembleValidation {
    double mc_mean = 0.0;
    double mc_stddev = 0.0;
    double exact = 0.0;
    double z_score = 0.0;
};

/// Cross-checks a Monte Carlo ensemble against the exact oracle:
/// z = |mc_mean - exact| / (mc_std / sqrt(M)). A degenerate ensemble
/// (std = 0) yields z = 0 when the means agree exactly, infinity otherwise.
inline EnsembleValidation validate_ensemble(const WeightedDigraph& g, const LiveGraphEnsemble& e,
                                            std::span<const NodeId> seeds,
                                            const EnumerationLimit& lim = {}) {
    e.check_base(g);
    EnsembleValidation r;
    r.exact = exact_spread(g, seeds, lim);

    std::vector<std::int32_t> sizes(static_cast<std::size_t>(e.size()));
    for (int i = 0; i < e.size(); ++i) {
        Bitset vis(static_cast<std::size_t>(g.node_count()));
        std::vector<NodeId> queue;
        for (NodeId s : seeds)
            if (!vis.test(static_cast<std::size_t>(s))) {
                vis.set(static_cast<std::size_t>(s));
                queue.push_back(s);
            }
        for (std::size_t qi = 0; qi < queue.size(); ++qi)
            for (auto oe : g.out_edges(queue[qi]))
                if (e.edge_present(i, oe.edge) && !vis.test(static_cast<std::size_t>(oe.dst))) {
                    vis.set(static_cast<std::size_t>(oe.dst));
                    queue.push_back(oe.dst);
                }
        sizes[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(vis.count());
    }
    SpreadStats st = make_spread_stats(std::move(sizes));
    r.mc_mean = st.mean;
    r.mc_stddev = st.stddev;
    if (st.stddev == 0.0) {
        r.z_score = (r.mc_mean == r.exact) ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
        r.z_score = std::abs(r.mc_mean - r.exact) /
                    (st.stddev / std::sqrt(static_cast<double>(e.size())));
    }
    return r;
}

}  // namespace phasecast

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "phasecast/bitset.hpp"
#include "phasecast/errors.hpp"
#include "phasecast/graph.hpp"
#include "phasecast/reach.hpp"

namespace phasecast {

enum class SelectorKind {
    LiveGraphGreedy,   // lazy greedy over the presampled ensemble (reference selector)
    DegreeDiscount,    // degree heuristic with neighbor discounting
    Irie               // iterative influence rank with one-hop influence estimation
};

inline const char* to_string(SelectorKind k) {
    switch (k) {
        case SelectorKind::LiveGraphGreedy: return "live-graph-greedy";
        case SelectorKind::DegreeDiscount: return "degree-discount";
        case SelectorKind::Irie: return "irie";
    }
    return "?";
}

inline SelectorKind selector_kind_from_string(const std::string& s) {
    if (s == "live-graph-greedy" || s == "greedy") return SelectorKind::LiveGraphGreedy;
    if (s == "degree-discount") return SelectorKind::DegreeDiscount;
    if (s == "irie") return SelectorKind::Irie;
    throw ValidationError("unknown selector kind '" + s + "'");
}

struct SelectorSpec {
    SelectorKind kind = SelectorKind::LiveGraphGreedy;
    double irie_alpha = 0.7;
    int irie_iterations = 20;
    double convergence_tol = 1e-6;

    void validate() const {
        if (!(irie_alpha > 0.0 && irie_alpha < 1.0))
            throw ValidationError("irie alpha must lie in (0,1)");
        if (irie_iterations < 1) throw ValidationError("irie iterations must be >= 1");
        if (convergence_tol < 0) throw ValidationError("convergence tolerance must be >= 0");
    }
};

namespace detail {

inline int count_uninfluenced(const Bitset& influenced, NodeId n) {
    return static_cast<int>(static_cast<std::size_t>(n) - influenced.count());
}

}  // namespace detail

/// Lazy (CELF-style) greedy on the fixed ensemble. The marginal gain of v
/// given influenced set S is the integer sum over live graphs of
/// |reach_j(S ∪ {v})| - |reach_j(S)|; that objective is coverage on the
/// ensemble, hence submodular, so lazy re-evaluation reproduces plain greedy
/// exactly. Ties break toward the lowest node id. Gains are exact integers,
/// so ordering never depends on floating-point noise.
inline std::vector<NodeId> greedy_celf(const ReachIndex& idx, const Bitset& influenced,
                                       int budget) {
    const WeightedDigraph& g = idx.graph();
    const NodeId n = g.node_count();
    const int m_count = idx.size();
    budget = std::min(budget, detail::count_uninfluenced(influenced, n));
    if (budget <= 0) return {};

    auto pins = idx.pin_all();
    const std::size_t words = pins[0]->words;
    std::vector<const std::uint64_t*> reach_base(static_cast<std::size_t>(m_count));
    std::vector<const std::int32_t*> comp_of(static_cast<std::size_t>(m_count));
    for (int j = 0; j < m_count; ++j) {
        reach_base[static_cast<std::size_t>(j)] = pins[static_cast<std::size_t>(j)]->reach_words.data();
        comp_of[static_cast<std::size_t>(j)] = pins[static_cast<std::size_t>(j)]->comp_of.data();
    }

    // covered[j] = closure_j(influenced), the ensemble-wide coverage baseline.
    std::vector<std::uint64_t> covered(static_cast<std::size_t>(m_count) * words, 0ULL);
    if (influenced.any()) {
        auto sources = influenced.to_indices();
        for (int j = 0; j < m_count; ++j) {
            std::uint64_t* dst = covered.data() + static_cast<std::size_t>(j) * words;
            for (NodeId s : sources)
                or_words(dst, reach_base[(std::size_t)j] +
                                  static_cast<std::size_t>(comp_of[(std::size_t)j][s]) * words,
                         words);
        }
    }

    auto eval_gain = [&](NodeId v) {
        std::int64_t gain = 0;
        for (int j = 0; j < m_count; ++j)
            gain += static_cast<std::int64_t>(andnot_count_words(
                reach_base[(std::size_t)j] +
                    static_cast<std::size_t>(comp_of[(std::size_t)j][v]) * words,
                covered.data() + static_cast<std::size_t>(j) * words, words));
        return gain;
    };

    struct Cand {
        std::int64_t gain;
        NodeId v;
        int round;
    };
    struct CandLess {
        bool operator()(const Cand& a, const Cand& b) const {
            if (a.gain != b.gain) return a.gain < b.gain;
            return a.v > b.v;  // lower id floats to the top on gain ties
        }
    };
    std::priority_queue<Cand, std::vector<Cand>, CandLess> heap;

    // Unconditioned singleton coverage upper-bounds every conditioned gain,
    // so the heap can start from the shared precomputed totals.
    const auto& cov0 = idx.singleton_coverage();
    const bool fresh0 = !influenced.any();
    for (NodeId v = 0; v < n; ++v) {
        if (influenced.test(static_cast<std::size_t>(v))) continue;
        heap.push({cov0[static_cast<std::size_t>(v)], v, fresh0 ? 0 : -1});
    }

    std::vector<NodeId> seeds;
    seeds.reserve(static_cast<std::size_t>(budget));
    int round = 0;
    while (static_cast<int>(seeds.size()) < budget && !heap.empty()) {
        Cand top = heap.top();
        heap.pop();
        if (top.round == round) {
            seeds.push_back(top.v);
            for (int j = 0; j < m_count; ++j)
                or_words(covered.data() + static_cast<std::size_t>(j) * words,
                         reach_base[(std::size_t)j] +
                             static_cast<std::size_t>(comp_of[(std::size_t)j][top.v]) * words,
                         words);
            ++round;
        } else {
            top.gain = eval_gain(top.v);
            top.round = round;
            heap.push(top);
        }
    }
    return seeds;
}

/// Degree-discount heuristic adapted to weighted digraphs: d_v is the
/// out-degree (influence potential), t_v counts in-neighbors that are already
/// seeds or influenced, and the uniform p is the mean edge probability.
/// dd_v = d_v - 2 t_v - (d_v - t_v) t_v p.
inline std::vector<NodeId> degree_discount(const WeightedDigraph& g, const Bitset& influenced,
                                           int budget, double uniform_p = -1.0) {
    const NodeId n = g.node_count();
    budget = std::min(budget, detail::count_uninfluenced(influenced, n));
    if (budget <= 0) return {};
    const double p = uniform_p >= 0.0 ? uniform_p : g.mean_edge_prob();

    std::vector<int> t(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> taken(static_cast<std::size_t>(n), 0);
    for (NodeId v = 0; v < n; ++v) {
        if (influenced.test(static_cast<std::size_t>(v))) taken[static_cast<std::size_t>(v)] = 1;
    }
    for (NodeId v = 0; v < n; ++v) {
        if (taken[static_cast<std::size_t>(v)]) continue;
        int cnt = 0;
        for (auto ie : g.in_edges(v))
            if (taken[static_cast<std::size_t>(ie.src)]) ++cnt;
        t[static_cast<std::size_t>(v)] = cnt;
    }
    auto dd = [&](NodeId v) {
        double d = static_cast<double>(g.out_degree(v));
        double tv = static_cast<double>(t[static_cast<std::size_t>(v)]);
        return d - 2.0 * tv - (d - tv) * tv * p;
    };

    std::vector<NodeId> seeds;
    seeds.reserve(static_cast<std::size_t>(budget));
    for (int pick = 0; pick < budget; ++pick) {
        NodeId best = -1;
        double best_dd = 0.0;
        for (NodeId v = 0; v < n; ++v) {
            if (taken[static_cast<std::size_t>(v)]) continue;
            double score = dd(v);
            if (best == -1 || score > best_dd) {
                best = v;
                best_dd = score;
            }
        }
        seeds.push_back(best);
        taken[static_cast<std::size_t>(best)] = 1;
        for (auto oe : g.out_edges(best))
            if (!taken[static_cast<std::size_t>(oe.dst)]) ++t[static_cast<std::size_t>(oe.dst)];
    }
    return seeds;
}

/// One influence-rank iteration sweep to a fixed point:
///   r(u) <- AP(u) * (1 + alpha * sum over out-edges (u,v) of p_uv * r(v))
/// AP(u) is the one-hop estimate of the probability u is still uninfluenced:
/// 0 when u is influenced/selected, else the product over influenced or
/// selected in-neighbors s of (1 - p_su).
inline std::vector<double> irie_rank(const WeightedDigraph& g, const Bitset& unavailable,
                                     const SelectorSpec& spec) {
    spec.validate();
    const NodeId n = g.node_count();
    std::vector<double> ap(static_cast<std::size_t>(n), 1.0);
    for (NodeId v = 0; v < n; ++v) {
        if (unavailable.test(static_cast<std::size_t>(v))) {
            ap[static_cast<std::size_t>(v)] = 0.0;
            continue;
        }
        double a = 1.0;
        for (auto ie : g.in_edges(v))
            if (unavailable.test(static_cast<std::size_t>(ie.src)))
                a *= 1.0 - g.edge(ie.edge).prob;
        ap[static_cast<std::size_t>(v)] = a;
    }

    std::vector<double> r(ap.begin(), ap.end());
    std::vector<double> next(static_cast<std::size_t>(n), 0.0);
    for (int it = 0; it < spec.irie_iterations; ++it) {
        double max_change = 0.0;
        for (NodeId u = 0; u < n; ++u) {
            double acc = 0.0;
            for (auto oe : g.out_edges(u))
                acc += g.edge(oe.edge).prob * r[static_cast<std::size_t>(oe.dst)];
            double val = ap[static_cast<std::size_t>(u)] * (1.0 + spec.irie_alpha * acc);
            max_change = std::max(max_change, std::abs(val - r[static_cast<std::size_t>(u)]));
            next[static_cast<std::size_t>(u)] = val;
        }
        r.swap(next);
        if (max_change < spec.convergence_tol) break;
    }
    return r;
}

/// Seeds by repeated rank-and-pick: ranks are recomputed from scratch after
/// every pick with the chosen seed folded into the AP estimate.
inline std::vector<NodeId> irie_select(const WeightedDigraph& g, const Bitset& influenced,
                                       int budget, const SelectorSpec& spec) {
    const NodeId n = g.node_count();
    budget = std::min(budget, detail::count_uninfluenced(influenced, n));
    if (budget <= 0) return {};
    Bitset unavailable = influenced;
    std::vector<NodeId> seeds;
    seeds.reserve(static_cast<std::size_t>(budget));
    for (int pick = 0; pick < budget; ++pick) {
        std::vector<double> r = irie_rank(g, unavailable, spec);
        NodeId best = -1;
        double best_rank = 0.0;
        for (NodeId v = 0; v < n; ++v) {
            if (unavailable.test(static_cast<std::size_t>(v))) continue;
            if (best == -1 || r[static_cast<std::size_t>(v)] > best_rank) {
                best = v;
                best_rank = r[static_cast<std::size_t>(v)];
            }
        }
        seeds.push_back(best);
        unavailable.set(static_cast<std::size_t>(best));
    }
    return seeds;
}

/// Dispatcher over the pluggable selectors. Returns exactly
/// min(budget, #uninfluenced) distinct uninfluenced nodes, deterministically.
inline std::vector<NodeId> select_seeds(const WeightedDigraph& g, const ReachIndex& idx,
                                        const Bitset& influenced, int budget,
                                        const SelectorSpec& spec) {
    if (budget < 0) throw ValidationError("seed budget must be non-negative");
    spec.validate();
    switch (spec.kind) {
        case SelectorKind::LiveGraphGreedy: return greedy_celf(idx, influenced, budget);
        case SelectorKind::DegreeDiscount: return degree_discount(g, influenced, budget);
        case SelectorKind::Irie: return irie_select(g, influenced, budget, spec);
    }
    throw ValidationError("unknown selector kind");
}

}  // namespace phasecast

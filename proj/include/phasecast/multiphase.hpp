#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "phasecast/budget_split.hpp"
#include "phasecast/errors.hpp"
#include "phasecast/live_graph.hpp"
#include "phasecast/parallel.hpp"
#include "phasecast/reach.hpp"
#include "phasecast/seed_select.hpp"
#include "phasecast/stats.hpp"

namespace phasecast {

/// Everything a p-phase run produces: per-phase cumulative and incremental
/// spread distributions, the global phase-1 seeds, and per-state seeds for
/// the adaptive phases. Incremental means sum to the final cumulative mean
/// exactly (both derive from the same integer sizes).
struct PhaseReport {
    BudgetSplit split;
    SelectorKind selector = SelectorKind::LiveGraphGreedy;
    int ensemble_size = 0;
    bool budget_clamped = false;  // split total exceeded the node count

    std::vector<SpreadStats> cumulative;   // one per phase
    std::vector<SpreadStats> incremental;  // one per phase

    std::vector<NodeId> phase1_seeds;
    /// per_state_seeds[q-2][i] = seeds chosen for live graph i in phase q.
    std::vector<std::vector<std::vector<NodeId>>> per_state_seeds;

    int phases() const { return static_cast<int>(cumulative.size()); }
    double final_mean() const { return cumulative.empty() ? 0.0 : cumulative.back().mean; }

    std::vector<double> incremental_means() const {
        std::vector<double> m;
        m.reserve(incremental.size());
        for (const auto& s : incremental) m.push_back(s.mean);
        return m;
    }

    /// How often each node was seeded in phase q >= 2, across states.
    std::map<NodeId, int> seed_frequency(int phase) const {
        std::map<NodeId, int> freq;
        if (phase < 2 || phase > phases()) return freq;
        for (const auto& seeds : per_state_seeds[static_cast<std::size_t>(phase - 2)])
            for (NodeId v : seeds) ++freq[v];
        return freq;
    }
};

/// Executes myopic p-phase adaptive seeding over the ensemble. Phase 1 picks
/// k_1 seeds once globally; every later phase picks k_q seeds per diffusion
/// state (states with identical influenced sets and budgets share one
/// selector invocation) and advances each live graph by reachability closure.
/// Budget a state cannot spend rolls into its terminal phase.
inline PhaseReport run_multiphase(const ReachIndex& idx, const BudgetSplit& split,
                                  const SelectorSpec& spec, int workers = 0) {
    split.validate(split.total());
    spec.validate();
    const WeightedDigraph& g = idx.graph();
    const NodeId n = g.node_count();
    const int m_count = idx.size();
    const int p = split.phases();

    PhaseReport report;
    report.split = split;
    report.selector = spec.kind;
    report.ensemble_size = m_count;
    report.budget_clamped = split.total() > n;

    Bitset empty(static_cast<std::size_t>(n));
    std::vector<Bitset> influenced(static_cast<std::size_t>(m_count), empty);
    std::vector<int> surplus(static_cast<std::size_t>(m_count), 0);
    std::vector<std::vector<std::int32_t>> cum_sizes;

    // Phase 1: one global selection applied to every live graph.
    report.phase1_seeds = select_seeds(g, idx, empty, split.allocations[0], spec);
    {
        int unspent = split.allocations[0] - static_cast<int>(report.phase1_seeds.size());
        for (auto& s : surplus) s = unspent;
    }
    parallel_for(static_cast<std::size_t>(m_count), workers, [&](std::size_t i) {
        idx.reach_into(static_cast<int>(i), report.phase1_seeds, influenced[i]);
    });
    {
        std::vector<std::int32_t> sizes(static_cast<std::size_t>(m_count));
        for (int i = 0; i < m_count; ++i)
            sizes[static_cast<std::size_t>(i)] =
                static_cast<std::int32_t>(influenced[static_cast<std::size_t>(i)].count());
        cum_sizes.push_back(std::move(sizes));
    }

    for (int q = 2; q <= p; ++q) {
        const bool terminal = q == p;
        const int base_budget = split.allocations[static_cast<std::size_t>(q - 1)];

        // Deduplicate states: selection depends only on (influenced set, budget).
        struct Group {
            int representative;
            int budget;
            std::vector<NodeId> seeds;
        };
        std::vector<Group> groups;
        std::vector<int> group_of(static_cast<std::size_t>(m_count), -1);
        {
            struct Key {
                std::size_t hash;
                int budget;
                bool operator==(const Key& o) const { return hash == o.hash && budget == o.budget; }
            };
            struct KeyHash {
                std::size_t operator()(const Key& k) const {
                    return k.hash ^ (static_cast<std::size_t>(k.budget) * 0x9e3779b97f4a7c15ULL);
                }
            };
            std::unordered_map<Key, std::vector<int>, KeyHash> buckets;
            for (int i = 0; i < m_count; ++i) {
                int budget = base_budget + (terminal ? surplus[static_cast<std::size_t>(i)] : 0);
                Key key{influenced[static_cast<std::size_t>(i)].hash(), budget};
                auto& bucket = buckets[key];
                int gid = -1;
                for (int cand : bucket) {  // guard against hash collisions
                    if (influenced[static_cast<std::size_t>(groups[(std::size_t)cand].representative)] ==
                        influenced[static_cast<std::size_t>(i)]) {
                        gid = cand;
                        break;
                    }
                }
                if (gid == -1) {
                    gid = static_cast<int>(groups.size());
                    groups.push_back({i, budget, {}});
                    bucket.push_back(gid);
                }
                group_of[static_cast<std::size_t>(i)] = gid;
            }
        }

        parallel_for(groups.size(), workers, [&](std::size_t gi) {
            Group& grp = groups[gi];
            grp.seeds = select_seeds(g, idx, influenced[static_cast<std::size_t>(grp.representative)],
                                     grp.budget, spec);
        });

        std::vector<std::vector<NodeId>> state_seeds(static_cast<std::size_t>(m_count));
        for (int i = 0; i < m_count; ++i) {
            const Group& grp = groups[static_cast<std::size_t>(group_of[(std::size_t)i])];
            state_seeds[static_cast<std::size_t>(i)] = grp.seeds;
            if (!terminal) {
                int spent = static_cast<int>(grp.seeds.size());
                surplus[static_cast<std::size_t>(i)] += base_budget - spent;
            }
        }

        parallel_for(static_cast<std::size_t>(m_count), workers, [&](std::size_t i) {
            idx.reach_into(static_cast<int>(i), state_seeds[i], influenced[i]);
        });

        std::vector<std::int32_t> sizes(static_cast<std::size_t>(m_count));
        for (int i = 0; i < m_count; ++i)
            sizes[static_cast<std::size_t>(i)] =
                static_cast<std::int32_t>(influenced[static_cast<std::size_t>(i)].count());
        cum_sizes.push_back(std::move(sizes));
        report.per_state_seeds.push_back(std::move(state_seeds));
    }

    for (int q = 0; q < p; ++q) {
        std::vector<std::int32_t> inc(static_cast<std::size_t>(m_count));
        for (int i = 0; i < m_count; ++i) {
            std::int32_t prev =
                q == 0 ? 0 : cum_sizes[static_cast<std::size_t>(q - 1)][static_cast<std::size_t>(i)];
            inc[static_cast<std::size_t>(i)] =
                cum_sizes[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)] - prev;
        }
        report.cumulative.push_back(make_spread_stats(cum_sizes[static_cast<std::size_t>(q)]));
        report.incremental.push_back(make_spread_stats(std::move(inc)));
    }
    return report;
}

struct SigmaComparison {
    double sigma_p = 0.0;  // std of the phase-2 incremental spread (multiphase)
    double sigma_s = 0.0;  // std of the single-phase k1 -> k1+k2 increment
};

/// Compares adaptivity against budget growth on the same ensemble: sigma_p is
/// the stddev of what phase 2 adds in a multiphase run; sigma_s is the stddev
/// of what raising a single-phase budget from k_1 to k_1+k_2 adds, per live
/// graph, with nested seed sets.
inline SigmaComparison sigma_comparison(const ReachIndex& idx, const BudgetSplit& split,
                                        const SelectorSpec& spec, int workers = 0) {
    if (split.phases() < 2) throw ValidationError("sigma comparison needs at least two phases");
    SigmaComparison out;
    PhaseReport rep = run_multiphase(idx, split, spec, workers);
    out.sigma_p = rep.incremental[1].stddev;

    const WeightedDigraph& g = idx.graph();
    const int m_count = idx.size();
    const int k1 = split.allocations[0];
    const int k2 = split.allocations[1];
    Bitset empty(static_cast<std::size_t>(g.node_count()));
    std::vector<NodeId> seeds = select_seeds(g, idx, empty, k1 + k2, spec);
    std::span<const NodeId> all(seeds);
    std::span<const NodeId> prefix = all.subspan(0, std::min<std::size_t>(all.size(), (std::size_t)k1));

    std::vector<std::int32_t> deltas(static_cast<std::size_t>(m_count));
    parallel_for(static_cast<std::size_t>(m_count), workers, [&](std::size_t i) {
        Bitset reach_k1(static_cast<std::size_t>(g.node_count()));
        idx.reach_into(static_cast<int>(i), prefix, reach_k1);
        std::size_t a = reach_k1.count();
        idx.reach_into(static_cast<int>(i), all.subspan(prefix.size()), reach_k1);
        deltas[i] = static_cast<std::int32_t>(reach_k1.count() - a);
    });
    out.sigma_s = make_spread_stats(std::move(deltas)).stddev;
    return out;
}

/// Max relative deviation of the per-phase incremental means from their
/// common average (final mean / p); 0 for single-phase runs.
inline double equal_spacing_check(const PhaseReport& report) {
    const int p = report.phases();
    if (p <= 1) return 0.0;
    double target = report.final_mean() / static_cast<double>(p);
    if (target == 0.0) return 0.0;
    double worst = 0.0;
    for (const auto& inc : report.incremental)
        worst = std::max(worst, std::abs(inc.mean - target) / target);
    return worst;
}

}  // namespace phasecast

#pragma once

#include <atomic>
#include <bit>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "phasecast/bitset.hpp"
#include "phasecast/errors.hpp"
#include "phasecast/graph.hpp"
#include "phasecast/live_graph.hpp"
#include "phasecast/parallel.hpp"

namespace phasecast {

/// SCC condensation of one live graph plus the full reachability closure of
/// every component (as node bitsets). Component ids are assigned in Tarjan
/// completion order, so every successor of component c has an id < c.
struct GraphClosure {
    NodeId n = 0;
    std::size_t words = 0;  // bitset words per component closure
    std::int32_t comp_count = 0;
    std::vector<std::int32_t> comp_of;        // node -> component
    std::vector<std::uint64_t> reach_words;   // comp_count x words

    const std::uint64_t* comp_reach(std::int32_t c) const {
        return reach_words.data() + static_cast<std::size_t>(c) * words;
    }
    const std::uint64_t* node_reach(NodeId v) const {
        return comp_reach(comp_of[static_cast<std::size_t>(v)]);
    }
    std::size_t node_reach_count(NodeId v) const {
        const std::uint64_t* w = node_reach(v);
        std::size_t c = 0;
        for (std::size_t i = 0; i < words; ++i) c += std::popcount(w[i]);
        return c;
    }
    std::size_t bytes() const {
        return reach_words.size() * sizeof(std::uint64_t) +
               comp_of.size() * sizeof(std::int32_t);
    }
};

namespace detail {

/// Iterative Tarjan over the live subgraph (base out-edges filtered by the
/// ensemble bitmap), followed by a closure sweep in completion order.
inline GraphClosure build_graph_closure(const WeightedDigraph& g, const LiveGraphEnsemble& e,
                                        int gi) {
    const NodeId n = g.node_count();
    GraphClosure cl;
    cl.n = n;
    cl.words = words_for_bits(static_cast<std::size_t>(n));
    cl.comp_of.assign(static_cast<std::size_t>(n), -1);

    std::vector<std::int32_t> index(static_cast<std::size_t>(n), -1);
    std::vector<std::int32_t> low(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> on_stack(static_cast<std::size_t>(n), 0);
    std::vector<NodeId> scc_stack;
    scc_stack.reserve(static_cast<std::size_t>(n));

    struct Frame {
        NodeId v;
        std::size_t next_edge;
    };
    std::vector<Frame> frames;
    std::int32_t counter = 0;

    for (NodeId root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] != -1) continue;
        frames.push_back({root, 0});
        index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
        scc_stack.push_back(root);
        on_stack[static_cast<std::size_t>(root)] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            auto out = g.out_edges(f.v);
            bool descended = false;
            while (f.next_edge < out.size()) {
                auto oe = out[f.next_edge++];
                if (!e.edge_present(gi, oe.edge)) continue;
                NodeId w = oe.dst;
                if (index[static_cast<std::size_t>(w)] == -1) {
                    index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] =
                        counter++;
                    scc_stack.push_back(w);
                    on_stack[static_cast<std::size_t>(w)] = 1;
                    frames.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[static_cast<std::size_t>(w)]) {
                    if (index[static_cast<std::size_t>(w)] < low[static_cast<std::size_t>(f.v)])
                        low[static_cast<std::size_t>(f.v)] = index[static_cast<std::size_t>(w)];
                }
            }
            if (descended) continue;
            NodeId v = f.v;
            frames.pop_back();
            if (low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
                for (;;) {
                    NodeId w = scc_stack.back();
                    scc_stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = 0;
                    cl.comp_of[static_cast<std::size_t>(w)] = cl.comp_count;
                    if (w == v) break;
                }
                ++cl.comp_count;
            }
            if (!frames.empty()) {
                NodeId p = frames.back().v;
                if (low[static_cast<std::size_t>(v)] < low[static_cast<std::size_t>(p)])
                    low[static_cast<std::size_t>(p)] = low[static_cast<std::size_t>(v)];
            }
        }
    }

    cl.reach_words.assign(static_cast<std::size_t>(cl.comp_count) * cl.words, 0ULL);
    for (NodeId v = 0; v < n; ++v) {
        std::uint64_t* w =
            cl.reach_words.data() + static_cast<std::size_t>(cl.comp_of[(std::size_t)v]) * cl.words;
        w[static_cast<std::size_t>(v) >> 6] |= 1ULL << (static_cast<std::size_t>(v) & 63);
    }
    // Completion order is reverse topological: all successors of a component
    // carry smaller ids, so one ascending sweep completes every closure.
    std::vector<std::int32_t> comp_off(static_cast<std::size_t>(cl.comp_count) + 1, 0);
    for (NodeId v = 0; v < n; ++v) ++comp_off[static_cast<std::size_t>(cl.comp_of[(std::size_t)v]) + 1];
    for (std::size_t i = 1; i < comp_off.size(); ++i) comp_off[i] += comp_off[i - 1];
    std::vector<NodeId> comp_nodes(static_cast<std::size_t>(n));
    {
        std::vector<std::int32_t> pos(comp_off.begin(), comp_off.end() - 1);
        for (NodeId v = 0; v < n; ++v)
            comp_nodes[static_cast<std::size_t>(pos[(std::size_t)cl.comp_of[(std::size_t)v]]++)] = v;
    }
    for (std::int32_t c = 0; c < cl.comp_count; ++c) {
        std::uint64_t* dst = cl.reach_words.data() + static_cast<std::size_t>(c) * cl.words;
        for (std::int32_t i = comp_off[static_cast<std::size_t>(c)];
             i < comp_off[static_cast<std::size_t>(c) + 1]; ++i) {
            NodeId v = comp_nodes[static_cast<std::size_t>(i)];
            for (auto oe : g.out_edges(v)) {
                if (!e.edge_present(gi, oe.edge)) continue;
                std::int32_t d = cl.comp_of[static_cast<std::size_t>(oe.dst)];
                if (d != c) or_words(dst, cl.reach_words.data() + static_cast<std::size_t>(d) * cl.words,
                                     cl.words);
            }
        }
    }
    return cl;
}

}  // namespace detail

struct ReachOptions {
    /// Memoization budget for component closures, shared across the ensemble.
    /// Within budget queries run on cached closures; beyond it they fall back
    /// to on-demand BFS over the live graph.
    std::size_t memo_budget_bytes = std::size_t(512) << 20;
};

/// Reachability query layer over an ensemble. Thread-safe: concurrent reads
/// share an internally synchronized LRU of per-graph closures.
class ReachIndex {
public:
    ReachIndex(const WeightedDigraph& g, const LiveGraphEnsemble& e, ReachOptions opt = {})
        : g_(&g), e_(&e), opt_(opt) {
        e.check_base(g);
        words_ = words_for_bits(static_cast<std::size_t>(g.node_count()));
        // Worst-case closure footprint: every node its own component.
        per_graph_estimate_ = static_cast<std::size_t>(g.node_count()) * words_ * 8 +
                              static_cast<std::size_t>(g.node_count()) * 4;
    }

    const WeightedDigraph& graph() const { return *g_; }
    const LiveGraphEnsemble& ensemble() const { return *e_; }
    int size() const { return e_->size(); }

    /// Cached condensation+closures for one live graph (LRU-evicted under
    /// memory pressure; returned pointer stays valid while held).
    std::shared_ptr<const GraphClosure> closure(int gi) const {
        e_->check_index(gi);
        {
            std::lock_guard<std::mutex> lk(mu_);
            auto it = cache_.find(gi);
            if (it != cache_.end()) {
                lru_.splice(lru_.begin(), lru_, it->second.lru_it);
                return it->second.ptr;
            }
        }
        auto built = std::make_shared<const GraphClosure>(detail::build_graph_closure(*g_, *e_, gi));
        std::lock_guard<std::mutex> lk(mu_);
        auto it = cache_.find(gi);
        if (it != cache_.end()) return it->second.ptr;  // raced; keep the first
        lru_.push_front(gi);
        cache_.emplace(gi, Entry{built, lru_.begin()});
        cached_bytes_ += built->bytes();
        while (cached_bytes_ > opt_.memo_budget_bytes && cache_.size() > 1) {
            int victim = lru_.back();
            lru_.pop_back();
            auto vit = cache_.find(victim);
            cached_bytes_ -= vit->second.ptr->bytes();
            cache_.erase(vit);
        }
        return built;
    }

    /// Closure of `sources` in live graph gi OR'd into `out`. `out` must be
    /// empty or already reachability-closed in that graph.
    void reach_into(int gi, std::span<const NodeId> sources, Bitset& out) const {
        e_->check_index(gi);
        if (use_closures()) {
            auto cl = closure(gi);
            for (NodeId s : sources) out.or_with({cl->node_reach(s), cl->words});
        } else {
            reach_bfs_into(gi, sources, out);
        }
    }

    Bitset reach(int gi, std::span<const NodeId> sources) const {
        Bitset out(static_cast<std::size_t>(g_->node_count()));
        reach_into(gi, sources, out);
        return out;
    }

    /// Plain BFS over the live graph; independent of the closure machinery.
    void reach_bfs_into(int gi, std::span<const NodeId> sources, Bitset& out) const {
        std::vector<NodeId> queue;
        queue.reserve(sources.size());
        for (NodeId s : sources) {
            if (!out.test(static_cast<std::size_t>(s))) {
                out.set(static_cast<std::size_t>(s));
                queue.push_back(s);
            }
        }
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            NodeId u = queue[qi];
            for (auto oe : g_->out_edges(u)) {
                if (!e_->edge_present(gi, oe.edge)) continue;
                if (!out.test(static_cast<std::size_t>(oe.dst))) {
                    out.set(static_cast<std::size_t>(oe.dst));
                    queue.push_back(oe.dst);
                }
            }
        }
    }

    bool use_closures() const { return per_graph_estimate_ <= opt_.memo_budget_bytes; }

    /// Builds and pins every graph's closure (the greedy selector's fast
    /// path). Refuses when the ensemble cannot fit in the memo budget.
    std::vector<std::shared_ptr<const GraphClosure>> pin_all(int workers = 0) const {
        {
            std::lock_guard<std::mutex> lk(pin_mu_);
            if (!pinned_.empty()) return pinned_;
        }
        if (per_graph_estimate_ * static_cast<std::size_t>(e_->size()) >
            opt_.memo_budget_bytes * 4) {
            // Rough refusal before doing the work; actual usage re-checked below.
            throw RefusalError("ensemble reachability cache would exceed the memo budget; "
                               "raise the budget or use a rank-based selector");
        }
        std::vector<std::shared_ptr<const GraphClosure>> all(static_cast<std::size_t>(e_->size()));
        std::atomic<std::size_t> total{0};
        parallel_for(all.size(), workers, [&](std::size_t i) {
            auto cl = std::make_shared<const GraphClosure>(
                detail::build_graph_closure(*g_, *e_, static_cast<int>(i)));
            total.fetch_add(cl->bytes(), std::memory_order_relaxed);
            all[i] = std::move(cl);
        });
        if (total.load() > opt_.memo_budget_bytes)
            throw RefusalError("ensemble reachability cache (" + std::to_string(total.load()) +
                               " bytes) exceeds the memo budget");
        std::lock_guard<std::mutex> lk(pin_mu_);
        if (pinned_.empty()) pinned_ = std::move(all);
        return pinned_;
    }

    /// Sum over live graphs of |reach({v})|, per node: exact upper bounds for
    /// greedy marginal gains on any diffusion state. Cached after first use.
    const std::vector<std::int64_t>& singleton_coverage(int workers = 0) const {
        std::call_once(cov_once_, [&] {
            auto pins = pin_all(workers);
            std::vector<std::int64_t> cov(static_cast<std::size_t>(g_->node_count()), 0);
            for (const auto& cl : pins)
                for (NodeId v = 0; v < g_->node_count(); ++v)
                    cov[static_cast<std::size_t>(v)] +=
                        static_cast<std::int64_t>(cl->node_reach_count(v));
            coverage_ = std::move(cov);
        });
        return coverage_;
    }

private:
    struct Entry {
        std::shared_ptr<const GraphClosure> ptr;
        std::list<int>::iterator lru_it;
    };

    const WeightedDigraph* g_;
    const LiveGraphEnsemble* e_;
    ReachOptions opt_;
    std::size_t words_ = 0;
    std::size_t per_graph_estimate_ = 0;

    mutable std::mutex mu_;
    mutable std::list<int> lru_;
    mutable std::unordered_map<int, Entry> cache_;
    mutable std::size_t cached_bytes_ = 0;

    mutable std::mutex pin_mu_;
    mutable std::vector<std::shared_ptr<const GraphClosure>> pinned_;
    mutable std::once_flag cov_once_;
    mutable std::vector<std::int64_t> coverage_;
};

/// Advances a diffusion state: per live graph, the new influenced set is the
/// reachability closure of (influenced ∪ new_seeds); the phase index ticks.
/// Idempotent when seeds are already influenced.
inline DiffusionState advance_state(const ReachIndex& idx,
                                    const DiffusionState& state,
                                    std::span<const std::vector<NodeId>> per_graph_seeds,
                                    int workers = 0) {
    if (per_graph_seeds.size() != state.influenced.size())
        throw ValidationError("per-graph seed lists do not match ensemble size");
    DiffusionState next;
    next.phase_index = state.phase_index + 1;
    next.influenced.assign(state.influenced.size(),
                           Bitset(static_cast<std::size_t>(idx.graph().node_count())));
    parallel_for(state.influenced.size(), workers, [&](std::size_t i) {
        std::vector<NodeId> sources = state.influenced[i].to_indices();
        sources.insert(sources.end(), per_graph_seeds[i].begin(), per_graph_seeds[i].end());
        idx.reach_bfs_into(static_cast<int>(i), sources, next.influenced[i]);
    });
    return next;
}

/// Same seeds applied to every live graph (typical for phase 1).
inline DiffusionState advance_state(const ReachIndex& idx, const DiffusionState& state,
                                    std::span<const NodeId> seeds, int workers = 0) {
    std::vector<std::vector<NodeId>> per_graph(state.influenced.size(),
                                               std::vector<NodeId>(seeds.begin(), seeds.end()));
    return advance_state(idx, state, per_graph, workers);
}

}  // namespace phasecast

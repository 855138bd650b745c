#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "phasecast/bitset.hpp"
#include "phasecast/errors.hpp"
#include "phasecast/graph.hpp"
#include "phasecast/parallel.hpp"
#include "phasecast/rng.hpp"
#include "phasecast/stats.hpp"

namespace phasecast {

/// M presampled live graphs of a base graph, stored as per-graph edge-presence
/// bitmaps. Edge e is present in live graph i with probability p_e, drawn from
/// an RNG stream derived from (master_seed, i): resampling with the same seed
/// is bit-identical regardless of worker count or sampling order.
class LiveGraphEnsemble {
public:
    LiveGraphEnsemble() = default;

    static LiveGraphEnsemble sample(const WeightedDigraph& g, int m_count, std::uint64_t seed,
                                    int workers = 0) {
        if (m_count < 1) throw ValidationError("ensemble size must be >= 1");
        if (!g.fully_weighted())
            throw ValidationError("graph has unassigned edge probabilities; "
                                  "apply a probability model before sampling");
        LiveGraphEnsemble e;
        e.init_header(g, m_count, seed);
        e.bits_.assign(static_cast<std::size_t>(m_count) * e.words_per_graph_, 0ULL);
        const auto& edges = g.edges();
        parallel_for(static_cast<std::size_t>(m_count), workers, [&](std::size_t i) {
            auto eng = make_engine(seed, i);
            std::uint64_t* w = e.bits_.data() + i * e.words_per_graph_;
            for (std::size_t ei = 0; ei < edges.size(); ++ei) {
                if (canonical_u01(eng) < edges[ei].prob) w[ei >> 6] |= 1ULL << (ei & 63);
            }
        });
        return e;
    }

    /// Builds an ensemble from explicit edge bitmasks (one entry per graph,
    /// bit ei = edge ei present). Used by tests and exact-distribution tools.
    static LiveGraphEnsemble from_bitmaps(const WeightedDigraph& g,
                                          const std::vector<std::vector<bool>>& bitmaps,
                                          std::uint64_t seed_label = 0) {
        if (bitmaps.empty()) throw ValidationError("ensemble needs at least one live graph");
        LiveGraphEnsemble e;
        e.init_header(g, static_cast<int>(bitmaps.size()), seed_label);
        e.bits_.assign(bitmaps.size() * e.words_per_graph_, 0ULL);
        for (std::size_t i = 0; i < bitmaps.size(); ++i) {
            if (bitmaps[i].size() != static_cast<std::size_t>(g.edge_count()))
                throw ValidationError("bitmap size does not match edge count");
            std::uint64_t* w = e.bits_.data() + i * e.words_per_graph_;
            for (std::size_t ei = 0; ei < bitmaps[i].size(); ++ei)
                if (bitmaps[i][ei]) w[ei >> 6] |= 1ULL << (ei & 63);
        }
        return e;
    }

    int size() const { return m_count_; }
    std::uint64_t master_seed() const { return master_seed_; }
    NodeId base_nodes() const { return base_nodes_; }
    EdgeId base_edges() const { return base_edges_; }
    std::uint64_t base_hash() const { return base_hash_; }
    std::size_t words_per_graph() const { return words_per_graph_; }

    bool edge_present(int graph, EdgeId e) const {
        const std::uint64_t* w = bits_.data() + static_cast<std::size_t>(graph) * words_per_graph_;
        return (w[static_cast<std::size_t>(e) >> 6] >> (static_cast<std::size_t>(e) & 63)) & 1ULL;
    }

    std::span<const std::uint64_t> graph_bits(int graph) const {
        return {bits_.data() + static_cast<std::size_t>(graph) * words_per_graph_,
                words_per_graph_};
    }

    void check_index(int graph) const {
        if (graph < 0 || graph >= m_count_)
            throw ValidationError("live-graph index " + std::to_string(graph) +
                                  " out of range [0," + std::to_string(m_count_) + ")");
    }

    /// Guards against pairing an ensemble with a different graph than it was
    /// sampled from.
    void check_base(const WeightedDigraph& g) const {
        if (g.node_count() != base_nodes_ || g.edge_count() != base_edges_ ||
            g.content_hash() != base_hash_)
            throw ValidationError("ensemble does not match this graph "
                                  "(node/edge counts or content hash differ)");
    }

    // -- persistence ---------------------------------------------------------
    // Little-endian binary: magic, u64 header fields, then raw bitmap words.
    // A persisted ensemble reloads bit-identically.

    void save(std::ostream& out) const {
        out.write(kMagic, 8);
        std::uint64_t header[5] = {master_seed_, static_cast<std::uint64_t>(m_count_),
                                   static_cast<std::uint64_t>(base_nodes_),
                                   static_cast<std::uint64_t>(base_edges_), base_hash_};
        out.write(reinterpret_cast<const char*>(header), sizeof(header));
        out.write(reinterpret_cast<const char*>(bits_.data()),
                  static_cast<std::streamsize>(bits_.size() * sizeof(std::uint64_t)));
        if (!out) throw IoError("failed writing ensemble");
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write ensemble '" + path + "'");
        save(out);
    }

    static LiveGraphEnsemble load(std::istream& in) {
        char magic[8];
        in.read(magic, 8);
        if (!in || std::memcmp(magic, kMagic, 8) != 0)
            throw ValidationError("not an ensemble file (bad magic)");
        std::uint64_t header[5];
        in.read(reinterpret_cast<char*>(header), sizeof(header));
        if (!in) throw IoError("truncated ensemble header");
        LiveGraphEnsemble e;
        e.master_seed_ = header[0];
        e.m_count_ = static_cast<int>(header[1]);
        e.base_nodes_ = static_cast<NodeId>(header[2]);
        e.base_edges_ = static_cast<EdgeId>(header[3]);
        e.base_hash_ = header[4];
        e.words_per_graph_ = words_for_bits(static_cast<std::size_t>(e.base_edges_));
        e.bits_.resize(static_cast<std::size_t>(e.m_count_) * e.words_per_graph_);
        in.read(reinterpret_cast<char*>(e.bits_.data()),
                static_cast<std::streamsize>(e.bits_.size() * sizeof(std::uint64_t)));
        if (!in) throw IoError("truncated ensemble bitmaps");
        return e;
    }

    static LiveGraphEnsemble load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open ensemble '" + path + "'");
        return load(in);
    }

    bool operator==(const LiveGraphEnsemble& o) const {
        return m_count_ == o.m_count_ && master_seed_ == o.master_seed_ &&
               base_nodes_ == o.base_nodes_ && base_edges_ == o.base_edges_ &&
               base_hash_ == o.base_hash_ && bits_ == o.bits_;
    }

private:
    static constexpr const char kMagic[9] = "PCENSv1\n";

    void init_header(const WeightedDigraph& g, int m_count, std::uint64_t seed) {
        m_count_ = m_count;
        master_seed_ = seed;
        base_nodes_ = g.node_count();
        base_edges_ = g.edge_count();
        base_hash_ = g.content_hash();
        words_per_graph_ = words_for_bits(static_cast<std::size_t>(base_edges_));
        if (words_per_graph_ == 0) words_per_graph_ = 1;  // edgeless graphs still index
    }

    int m_count_ = 0;
    std::uint64_t master_seed_ = 0;
    NodeId base_nodes_ = 0;
    EdgeId base_edges_ = 0;
    std::uint64_t base_hash_ = 0;
    std::size_t words_per_graph_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// Influenced-node sets per live graph at a phase boundary. Sets are
/// reachability-closed by construction and only grow across phases.
struct DiffusionState {
    int phase_index = 0;
    std::vector<Bitset> influenced;

    static DiffusionState fresh(NodeId n, int m_count) {
        DiffusionState s;
        s.influenced.assign(static_cast<std::size_t>(m_count), Bitset(static_cast<std::size_t>(n)));
        return s;
    }
};

/// Multiset of influenced-set sizes across the ensemble, with mean and sample
/// standard deviation.
inline SpreadStats spread_distribution(const DiffusionState& state) {
    std::vector<std::int32_t> sizes;
    sizes.reserve(state.influenced.size());
    for (const auto& b : state.influenced) sizes.push_back(static_cast<std::int32_t>(b.count()));
    return make_spread_stats(std::move(sizes));
}

}  // namespace phasecast

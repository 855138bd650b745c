#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "phasecast/errors.hpp"
#include "phasecast/rng.hpp"

namespace phasecast {

using NodeId = std::int32_t;
using EdgeId = std::int32_t;

struct Edge {
    NodeId src = -1;
    NodeId dst = -1;
    double prob = unset_prob();

    static constexpr double unset_prob() { return -1.0; }
    bool has_prob() const { return prob >= 0.0; }
};

/// Directed graph with per-edge influence probabilities. Node ids are dense
/// integers in [0, n); the mapping back to the original labels from the input
/// file is kept alongside. Immutable once built, safe for concurrent reads.
class WeightedDigraph {
public:
    WeightedDigraph() = default;

    /// Validates and indexes an edge list over nodes [0, n).
    /// Rejects self-loops, duplicate (src, dst) pairs, and probabilities
    /// outside [0,1].
    static WeightedDigraph from_edges(NodeId n, std::vector<Edge> edges,
                                      std::vector<std::string> labels = {}) {
        WeightedDigraph g;
        g.n_ = n;
        g.edges_ = std::move(edges);
        g.labels_ = std::move(labels);
        g.validate_and_index();
        return g;
    }

    NodeId node_count() const { return n_; }
    EdgeId edge_count() const { return static_cast<EdgeId>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(EdgeId e) const { return edges_[static_cast<std::size_t>(e)]; }

    /// Original input label of a dense node id ("0","1",... when constructed
    /// without labels).
    const std::string& label(NodeId v) const { return labels_[static_cast<std::size_t>(v)]; }
    const std::vector<std::string>& labels() const { return labels_; }

    /// Dense id for an original label; throws ValidationError when unknown.
    NodeId resolve(const std::string& original_label) const {
        auto it = label_index_.find(original_label);
        if (it == label_index_.end())
            throw ValidationError("unknown node id '" + original_label + "'");
        return it->second;
    }

    struct OutEdge {
        NodeId dst;
        EdgeId edge;
    };
    struct InEdge {
        NodeId src;
        EdgeId edge;
    };

    std::span<const OutEdge> out_edges(NodeId v) const {
        return {out_adj_.data() + out_off_[static_cast<std::size_t>(v)],
                out_adj_.data() + out_off_[static_cast<std::size_t>(v) + 1]};
    }
    std::span<const InEdge> in_edges(NodeId v) const {
        return {in_adj_.data() + in_off_[static_cast<std::size_t>(v)],
                in_adj_.data() + in_off_[static_cast<std::size_t>(v) + 1]};
    }
    std::size_t out_degree(NodeId v) const { return out_edges(v).size(); }
    std::size_t in_degree(NodeId v) const { return in_edges(v).size(); }

    bool fully_weighted() const {
        for (const auto& e : edges_)
            if (!e.has_prob()) return false;
        return true;
    }

    double mean_edge_prob() const {
        if (edges_.empty()) return 0.0;
        double s = 0.0;
        for (const auto& e : edges_) s += e.prob;
        return s / static_cast<double>(edges_.size());
    }

    /// Content hash over nodes, edges, and probability bits; used to pair
    /// persisted ensembles with the graph they were sampled from.
    std::uint64_t content_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](std::uint64_t x) {
            h ^= x;
            h *= 0x100000001b3ULL;
        };
        mix(static_cast<std::uint64_t>(n_));
        mix(edges_.size());
        for (const auto& e : edges_) {
            mix(static_cast<std::uint64_t>(e.src));
            mix(static_cast<std::uint64_t>(e.dst));
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(e.prob));
            std::memcpy(&bits, &e.prob, sizeof(bits));
            mix(bits);
        }
        return h;
    }

    void set_edge_prob(EdgeId e, double p) { edges_[static_cast<std::size_t>(e)].prob = p; }

private:
    void validate_and_index() {
        if (labels_.empty()) {
            labels_.reserve(static_cast<std::size_t>(n_));
            for (NodeId v = 0; v < n_; ++v) labels_.push_back(std::to_string(v));
        }
        if (static_cast<NodeId>(labels_.size()) != n_)
            throw ValidationError("label count does not match node count");
        for (NodeId v = 0; v < n_; ++v) label_index_.emplace(labels_[static_cast<std::size_t>(v)], v);

        std::unordered_set<std::uint64_t> seen;
        seen.reserve(edges_.size() * 2);
        for (const auto& e : edges_) {
            if (e.src < 0 || e.src >= n_ || e.dst < 0 || e.dst >= n_)
                throw ValidationError("edge endpoint out of range");
            if (e.src == e.dst)
                throw ValidationError("self-loop rejected at node " + labels_[(std::size_t)e.src]);
            if (e.has_prob() && (e.prob < 0.0 || e.prob > 1.0))
                throw ValidationError("edge probability outside [0,1]");
            std::uint64_t key =
                (static_cast<std::uint64_t>(e.src) << 32) | static_cast<std::uint32_t>(e.dst);
            if (!seen.insert(key).second)
                throw ValidationError("duplicate edge (" + labels_[(std::size_t)e.src] + ", " +
                                      labels_[(std::size_t)e.dst] + ")");
        }

        // CSR indexes over stable edge ids (edge order defines RNG streams).
        out_off_.assign(static_cast<std::size_t>(n_) + 1, 0);
        in_off_.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (const auto& e : edges_) {
            ++out_off_[static_cast<std::size_t>(e.src) + 1];
            ++in_off_[static_cast<std::size_t>(e.dst) + 1];
        }
        for (std::size_t i = 1; i < out_off_.size(); ++i) {
            out_off_[i] += out_off_[i - 1];
            in_off_[i] += in_off_[i - 1];
        }
        out_adj_.resize(edges_.size());
        in_adj_.resize(edges_.size());
        std::vector<std::size_t> opos(out_off_.begin(), out_off_.end() - 1);
        std::vector<std::size_t> ipos(in_off_.begin(), in_off_.end() - 1);
        for (EdgeId id = 0; id < static_cast<EdgeId>(edges_.size()); ++id) {
            const auto& e = edges_[static_cast<std::size_t>(id)];
            out_adj_[opos[static_cast<std::size_t>(e.src)]++] = {e.dst, id};
            in_adj_[ipos[static_cast<std::size_t>(e.dst)]++] = {e.src, id};
        }
    }

    NodeId n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, NodeId> label_index_;
    std::vector<std::size_t> out_off_, in_off_;
    std::vector<OutEdge> out_adj_;
    std::vector<InEdge> in_adj_;
};

// ---------------------------------------------------------------------------
// Edge-list ingestion
// ---------------------------------------------------------------------------

struct EdgeListOptions {
    /// Expand each input line into both directions (for undirected datasets).
    bool undirected = false;
};

namespace detail {

inline bool parse_prob_token(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        return pos == tok.size();
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace detail

/// Parses "u v" / "u v p" lines ('#' starts a comment). Node labels are
/// re-indexed densely in first-seen order; edges without an explicit p keep
/// an unset probability until a probability model assigns one.
inline WeightedDigraph load_edge_list_stream(std::istream& in,
                                             const EdgeListOptions& opt = {}) {
    std::vector<Edge> edges;
    std::vector<std::string> labels;
    std::unordered_map<std::string, NodeId> ids;
    auto intern = [&](const std::string& lbl) {
        auto it = ids.find(lbl);
        if (it != ids.end()) return it->second;
        NodeId v = static_cast<NodeId>(labels.size());
        labels.push_back(lbl);
        ids.emplace(lbl, v);
        return v;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string u, v, ptok, extra;
        if (!(ls >> u)) continue;  // blank or comment-only line
        if (!(ls >> v)) throw ParseError("expected 'u v' or 'u v p'", lineno);
        double p = Edge::unset_prob();
        if (ls >> ptok) {
            if (ls >> extra) throw ParseError("trailing tokens after 'u v p'", lineno);
            if (!detail::parse_prob_token(ptok, p))
                throw ParseError("unparsable probability '" + ptok + "'", lineno);
            if (p < 0.0 || p > 1.0)
                throw ParseError("probability " + ptok + " outside [0,1]", lineno);
        }
        NodeId a = intern(u);
        NodeId b = intern(v);
        edges.push_back({a, b, p});
        if (opt.undirected) edges.push_back({b, a, p});
    }
    return WeightedDigraph::from_edges(static_cast<NodeId>(labels.size()), std::move(edges),
                                       std::move(labels));
}

inline WeightedDigraph load_edge_list(const std::string& path, const EdgeListOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open edge list '" + path + "'");
    return load_edge_list_stream(in, opt);
}

/// Writes the graph back out in the same text format (dense ids, "%.17g"
/// probabilities so a re-ingest reproduces identical doubles).
inline void save_edge_list(const WeightedDigraph& g, std::ostream& out) {
    out << "# nodes=" << g.node_count() << " edges=" << g.edge_count() << "\n";
    char buf[64];
    for (const auto& e : g.edges()) {
        if (e.has_prob()) {
            std::snprintf(buf, sizeof(buf), "%d %d %.17g", e.src, e.dst, e.prob);
        } else {
            std::snprintf(buf, sizeof(buf), "%d %d", e.src, e.dst);
        }
        out << buf << "\n";
    }
}

inline void save_edge_list(const WeightedDigraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write edge list '" + path + "'");
    save_edge_list(g, out);
}

/// Sidecar mapping: one "original-id dense-id" line per node.
inline void save_id_map(const WeightedDigraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write id map '" + path + "'");
    for (NodeId v = 0; v < g.node_count(); ++v) out << g.label(v) << " " << v << "\n";
}

// ---------------------------------------------------------------------------
// Probability models
// ---------------------------------------------------------------------------

/// Weighted cascade: p_uv = 1 / in-degree(v). Influence flows along the edge
/// into v, so the reciprocal uses the in-degree of the target.
inline void assign_weighted_cascade(WeightedDigraph& g) {
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        NodeId v = g.edge(e).dst;
        g.set_edge_prob(e, 1.0 / static_cast<double>(g.in_degree(v)));
    }
}

/// Trivalency: each edge probability drawn independently and uniformly from
/// {0.001, 0.01, 0.1}; deterministic for a given seed.
inline void assign_trivalency(WeightedDigraph& g, std::uint64_t seed) {
    static constexpr double kLevels[3] = {0.001, 0.01, 0.1};
    auto eng = make_engine(seed, 0);
    for (EdgeId e = 0; e < g.edge_count(); ++e)
        g.set_edge_prob(e, kLevels[eng() % 3]);
}

}  // namespace phasecast

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "phasecast/budget_split.hpp"
#include "phasecast/errors.hpp"
#include "phasecast/multiphase.hpp"

namespace phasecast {

enum class SplitProvenance { Coarse, FinePerturbation, FineHypercube, ExhaustiveFine, DegenerateLowerP };

inline const char* to_string(SplitProvenance p) {
    switch (p) {
        case SplitProvenance::Coarse: return "coarse";
        case SplitProvenance::FinePerturbation: return "fine-perturbation";
        case SplitProvenance::FineHypercube: return "fine-hypercube";
        case SplitProvenance::ExhaustiveFine: return "exhaustive-fine";
        case SplitProvenance::DegenerateLowerP: return "degenerate-lower-p";
    }
    return "?";
}

enum class SearchStrategy { CoarseFine, GoldenSection };

struct SearchPlan {
    int total_budget = 0;
    int phases = 0;
    double coarse_step = 0.1;
    double fine_step = 0.05;
    int top_refine = 10;
    SearchStrategy strategy = SearchStrategy::CoarseFine;

    int coarse_slots() const { return static_cast<int>(std::llround(1.0 / coarse_step)); }
    int fine_slots() const { return static_cast<int>(std::llround(1.0 / fine_step)); }
    /// Fine perturbation step in budget units, rounded below.
    int fine_delta() const { return total_budget / fine_slots(); }

    void validate() const {
        if (phases < 2) throw ValidationError("budget-split search needs at least 2 phases");
        if (top_refine < 1) throw ValidationError("top_refine must be >= 1");
        auto check_step = [](double s, const char* name) {
            if (!(s > 0.0 && s < 1.0) || std::abs(1.0 / s - std::llround(1.0 / s)) > 1e-9)
                throw ValidationError(std::string(name) + " must divide 1 into an integer grid");
        };
        check_step(coarse_step, "coarse step");
        check_step(fine_step, "fine step");
        if (total_budget < coarse_slots())
            throw ValidationError("budget too small for the coarse grid: every phase needs a "
                                  "positive allocation");
    }
};

struct SplitEvaluation {
    BudgetSplit split;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> phase_means;  // incremental means per phase
    SplitProvenance provenance = SplitProvenance::Coarse;
    double wall_ms = 0.0;
};

struct SearchResult {
    std::vector<SplitEvaluation> evaluations;  // in evaluation order
    BudgetSplit best;
    double best_mean = 0.0;
    bool flat_landscape = false;
    std::int64_t evaluation_count = 0;  // run_multiphase invocations
    std::int64_t memo_hits = 0;         // splits recalled instead of re-evaluated
    std::vector<int> fine_new_splits;   // newly evaluated splits per refined coarse split
};

namespace detail {

/// Integer allocation for `mult` coarse-grid units: floor(mult * k / slots).
inline int grid_alloc(int mult, int k, int slots) { return (mult * k) / slots; }

}  // namespace detail

/// All splits whose every allocation is a positive integral multiple of
/// coarse_step * k (free coordinates rounded below, remainder to the terminal
/// phase). Equivalently p-1 cuts among the slots-1 interior cut points, so
/// the count is C(slots-1, p-1): 126 for the default grid at p = 5.
inline std::vector<BudgetSplit> coarse_grid(const SearchPlan& plan) {
    plan.validate();
    const int slots = plan.coarse_slots();
    const int p = plan.phases;
    const int k = plan.total_budget;
    std::vector<BudgetSplit> out;
    std::vector<int> cuts(static_cast<std::size_t>(p - 1));
    // choose ascending cut positions from {1, ..., slots-1}
    for (int i = 0; i < p - 1; ++i) cuts[static_cast<std::size_t>(i)] = i + 1;
    for (;;) {
        std::vector<int> alloc(static_cast<std::size_t>(p));
        int used = 0;
        int prev = 0;
        for (int q = 0; q < p - 1; ++q) {
            int a = detail::grid_alloc(cuts[static_cast<std::size_t>(q)] - prev, k, slots);
            alloc[static_cast<std::size_t>(q)] = a;
            used += a;
            prev = cuts[static_cast<std::size_t>(q)];
        }
        alloc[static_cast<std::size_t>(p - 1)] = k - used;
        out.emplace_back(std::move(alloc));

        int i = p - 2;
        while (i >= 0 && cuts[static_cast<std::size_t>(i)] == slots - 1 - (p - 2 - i)) --i;
        if (i < 0) break;
        ++cuts[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < p - 1; ++j)
            cuts[static_cast<std::size_t>(j)] = cuts[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

/// Step 1 of the fine search: the 2(p-1) splits obtained by nudging each free
/// coordinate of `best` by ±(fine_step * k, rounded below), dropping any
/// split whose free or constrained coordinate would go negative.
inline std::vector<BudgetSplit> fine_perturbations(const BudgetSplit& best, const SearchPlan& plan) {
    const int p = plan.phases;
    const int k = plan.total_budget;
    const int delta = plan.fine_delta();
    std::vector<BudgetSplit> out;
    if (delta == 0) return out;
    for (int q = 0; q < p - 1; ++q) {
        for (int sign : {+1, -1}) {
            std::vector<int> alloc = best.allocations;
            alloc[static_cast<std::size_t>(q)] += sign * delta;
            if (alloc[static_cast<std::size_t>(q)] < 0) continue;
            int free_sum = 0;
            for (int j = 0; j < p - 1; ++j) free_sum += alloc[static_cast<std::size_t>(j)];
            int tail = k - free_sum;
            if (tail < 0) continue;
            alloc[static_cast<std::size_t>(p - 1)] = tail;
            out.emplace_back(std::move(alloc));
        }
    }
    return out;
}

/// Step 2: vertices of the hypercube spanned per free dimension by
/// {h_q, z_q}, where z_q is the winning coordinate among
/// {h_q - delta, h_q, h_q + delta}. The center and the single-coordinate
/// vertices were already evaluated in step 1, so at most 2^(p-1) - p new
/// splits emerge.
inline std::vector<BudgetSplit> fine_hypercube(const BudgetSplit& best,
                                               const std::vector<int>& winners,
                                               const SearchPlan& plan) {
    const int p = plan.phases;
    const int k = plan.total_budget;
    if (static_cast<int>(winners.size()) != p - 1)
        throw ValidationError("winners must cover the p-1 free coordinates");
    std::vector<int> moved;
    for (int q = 0; q < p - 1; ++q)
        if (winners[static_cast<std::size_t>(q)] != best.allocations[static_cast<std::size_t>(q)])
            moved.push_back(q);
    std::vector<BudgetSplit> out;
    const int dims = static_cast<int>(moved.size());
    for (std::uint32_t mask = 0; mask < (1u << dims); ++mask) {
        if (std::popcount(mask) <= 1) continue;  // center and single-coordinate vertices
        std::vector<int> alloc = best.allocations;
        for (int b = 0; b < dims; ++b)
            if ((mask >> b) & 1u)
                alloc[static_cast<std::size_t>(moved[static_cast<std::size_t>(b)])] =
                    winners[static_cast<std::size_t>(moved[static_cast<std::size_t>(b)])];
        int free_sum = 0;
        bool ok = true;
        for (int j = 0; j < p - 1; ++j) {
            if (alloc[static_cast<std::size_t>(j)] < 0) ok = false;
            free_sum += alloc[static_cast<std::size_t>(j)];
        }
        int tail = k - free_sum;
        if (!ok || tail < 0) continue;
        alloc[static_cast<std::size_t>(p - 1)] = tail;
        out.emplace_back(std::move(alloc));
    }
    return out;
}

using SplitEvaluator = std::function<PhaseReport(const BudgetSplit&)>;

namespace detail {

class SearchMemo {
public:
    explicit SearchMemo(SearchResult& result, const SplitEvaluator& eval)
        : result_(result), eval_(eval) {}

    /// Evaluates a split once; later requests recall the stored value.
    /// Returns the index into result_.evaluations, or -1 for an invalid split.
    int request(const BudgetSplit& split, SplitProvenance prov, bool* was_new = nullptr) {
        if (was_new) *was_new = false;
        auto it = index_.find(split.allocations);
        if (it != index_.end()) {
            ++result_.memo_hits;
            return it->second;
        }
        auto t0 = std::chrono::steady_clock::now();
        PhaseReport rep = eval_(split);
        auto t1 = std::chrono::steady_clock::now();
        SplitEvaluation ev;
        ev.split = split;
        ev.mean = rep.final_mean();
        ev.stddev = rep.cumulative.back().stddev;
        ev.phase_means = rep.incremental_means();
        ev.provenance = prov;
        ev.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        int idx = static_cast<int>(result_.evaluations.size());
        result_.evaluations.push_back(std::move(ev));
        index_.emplace(split.allocations, idx);
        ++result_.evaluation_count;
        if (was_new) *was_new = true;
        return idx;
    }

    bool known(const BudgetSplit& split) const { return index_.count(split.allocations) > 0; }
    int lookup(const BudgetSplit& split) const {
        auto it = index_.find(split.allocations);
        return it == index_.end() ? -1 : it->second;
    }
    double mean_of(int idx) const {
        return idx < 0 ? -std::numeric_limits<double>::infinity()
                       : result_.evaluations[static_cast<std::size_t>(idx)].mean;
    }

    void append_external(const SplitEvaluation& ev) {
        if (index_.count(ev.split.allocations)) return;
        int idx = static_cast<int>(result_.evaluations.size());
        result_.evaluations.push_back(ev);
        result_.evaluations.back().provenance = SplitProvenance::DegenerateLowerP;
        index_.emplace(ev.split.allocations, idx);
    }

private:
    SearchResult& result_;
    const SplitEvaluator& eval_;
    std::map<std::vector<int>, int> index_;
};

inline void finalize_best(SearchResult& r) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(r.evaluations.size()); ++i) {
        if (best == -1 || r.evaluations[(std::size_t)i].mean > r.evaluations[(std::size_t)best].mean ||
            (r.evaluations[(std::size_t)i].mean == r.evaluations[(std::size_t)best].mean &&
             r.evaluations[(std::size_t)i].split < r.evaluations[(std::size_t)best].split))
            best = i;
    }
    if (best >= 0) {
        r.best = r.evaluations[static_cast<std::size_t>(best)].split;
        r.best_mean = r.evaluations[static_cast<std::size_t>(best)].mean;
        double lo = r.best_mean, hi = r.best_mean;
        for (const auto& ev : r.evaluations) {
            lo = std::min(lo, ev.mean);
            hi = std::max(hi, ev.mean);
        }
        r.flat_landscape = (lo == hi) && r.evaluations.size() > 1;
    }
}

/// Discrete golden-section probes along one free coordinate, the terminal
/// coordinate absorbing the slack. Assumes a roughly unimodal landscape;
/// memoization keeps repeated probes free. Returns the best allocation found
/// for coordinate q.
inline int golden_section_axis(const SearchPlan& plan, SearchMemo& memo,
                               const BudgetSplit& current, int q) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    const int p = plan.phases;
    const int span = current.allocations[static_cast<std::size_t>(q)] +
                     current.allocations[static_cast<std::size_t>(p - 1)];
    auto make = [&](int a) {
        std::vector<int> alloc = current.allocations;
        alloc[static_cast<std::size_t>(q)] = a;
        alloc[static_cast<std::size_t>(p - 1)] = span - a;
        return BudgetSplit(std::move(alloc));
    };
    auto mean_at = [&](int a) {
        return memo.mean_of(memo.request(make(a), SplitProvenance::FinePerturbation));
    };
    int lo = 0, hi = span;
    int x1 = lo + static_cast<int>(std::floor((1.0 - inv_phi) * (hi - lo)));
    int x2 = lo + static_cast<int>(std::floor(inv_phi * (hi - lo)));
    while (hi - lo > 3) {
        if (x2 <= x1) x2 = x1 + 1;
        if (mean_at(x1) >= mean_at(x2)) {
            hi = x2;
        } else {
            lo = x1;
        }
        x1 = lo + static_cast<int>(std::floor((1.0 - inv_phi) * (hi - lo)));
        x2 = lo + static_cast<int>(std::floor(inv_phi * (hi - lo)));
    }
    int best = lo;
    double best_mean = mean_at(lo);
    for (int a = lo + 1; a <= hi; ++a) {
        double m = mean_at(a);
        if (m > best_mean) {
            best_mean = m;
            best = a;
        }
    }
    return best;
}

}  // namespace detail

/// Coarse-then-fine search (or the optional golden-section strategy) for the
/// budget split maximizing the final mean spread, driven by an arbitrary
/// split evaluator. Every split is evaluated at most once; re-encountered
/// splits recall their stored value. Degenerate splits with zero allocations
/// can be appended from lower-phase results instead of re-evaluating.
inline SearchResult search_with_evaluator(const SearchPlan& plan, const SplitEvaluator& eval,
                                          const std::vector<SplitEvaluation>& lower_p = {}) {
    plan.validate();
    SearchResult result;
    detail::SearchMemo memo(result, eval);
    const int p = plan.phases;
    const int k = plan.total_budget;

    if (plan.strategy == SearchStrategy::GoldenSection) {
        // Start from the equal split and sweep the free coordinates.
        std::vector<int> alloc(static_cast<std::size_t>(p), k / p);
        alloc[static_cast<std::size_t>(p - 1)] = k - (k / p) * (p - 1);
        BudgetSplit current(std::move(alloc));
        memo.request(current, SplitProvenance::FinePerturbation);
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (int q = 0; q < p - 1; ++q) {
                int best_a = detail::golden_section_axis(plan, memo, current, q);
                int span = current.allocations[static_cast<std::size_t>(q)] +
                           current.allocations[static_cast<std::size_t>(p - 1)];
                current.allocations[static_cast<std::size_t>(q)] = best_a;
                current.allocations[static_cast<std::size_t>(p - 1)] = span - best_a;
            }
        }
        for (const auto& ev : lower_p) memo.append_external(ev);
        detail::finalize_best(result);
        return result;
    }

    if (p == 2) {
        // Exhaustive sweep over all multiples of fine_step * k.
        const int slots = plan.fine_slots();
        for (int m = 1; m < slots; ++m) {
            int k1 = detail::grid_alloc(m, k, slots);
            int k2 = k - k1;
            if (k1 <= 0 || k2 <= 0) continue;
            memo.request(BudgetSplit({k1, k2}), SplitProvenance::ExhaustiveFine);
        }
    } else {
        std::vector<int> coarse_idx;
        for (const auto& split : coarse_grid(plan))
            coarse_idx.push_back(memo.request(split, SplitProvenance::Coarse));

        // Rank coarse splits by mean (lexicographically smallest split on ties)
        // and refine the best top_refine of them, sharing one memo table.
        std::vector<int> ranked = coarse_idx;
        std::sort(ranked.begin(), ranked.end(), [&](int a, int b) {
            const auto& ea = result.evaluations[static_cast<std::size_t>(a)];
            const auto& eb = result.evaluations[static_cast<std::size_t>(b)];
            if (ea.mean != eb.mean) return ea.mean > eb.mean;
            return ea.split < eb.split;
        });
        const int refine = std::min<int>(plan.top_refine, static_cast<int>(ranked.size()));
        const int delta = plan.fine_delta();
        for (int r = 0; r < refine; ++r) {
            const BudgetSplit h = result.evaluations[static_cast<std::size_t>(ranked[(std::size_t)r])].split;
            int new_count = 0;
            bool was_new = false;
            for (const auto& s : fine_perturbations(h, plan)) {
                memo.request(s, SplitProvenance::FinePerturbation, &was_new);
                if (was_new) ++new_count;
            }
            if (delta > 0) {
                // Per-dimension winner among {h_q - delta, h_q, h_q + delta};
                // h_q wins ties, then the decrement.
                std::vector<int> winners(static_cast<std::size_t>(p - 1));
                for (int q = 0; q < p - 1; ++q) {
                    int hq = h.allocations[static_cast<std::size_t>(q)];
                    winners[static_cast<std::size_t>(q)] = hq;
                    double best_mean =
                        memo.mean_of(memo.lookup(h));
                    for (int cand : {hq - delta, hq + delta}) {
                        std::vector<int> alloc = h.allocations;
                        alloc[static_cast<std::size_t>(q)] = cand;
                        int free_sum = 0;
                        for (int j = 0; j < p - 1; ++j) free_sum += alloc[static_cast<std::size_t>(j)];
                        alloc[static_cast<std::size_t>(p - 1)] = k - free_sum;
                        if (cand < 0 || alloc[static_cast<std::size_t>(p - 1)] < 0) continue;
                        int idx = memo.lookup(BudgetSplit(alloc));
                        if (idx < 0) continue;  // perturbation was discarded
                        double m = memo.mean_of(idx);
                        if (m > best_mean) {
                            best_mean = m;
                            winners[static_cast<std::size_t>(q)] = cand;
                        }
                    }
                }
                for (const auto& s : fine_hypercube(h, winners, plan)) {
                    memo.request(s, SplitProvenance::FineHypercube, &was_new);
                    if (was_new) ++new_count;
                }
            }
            result.fine_new_splits.push_back(new_count);
        }
    }

    for (const auto& ev : lower_p) memo.append_external(ev);
    detail::finalize_best(result);
    return result;
}

/// Search driven by real multiphase runs on the shared ensemble.
inline SearchResult search_optimal_split(const ReachIndex& idx, const SearchPlan& plan,
                                         const SelectorSpec& spec, int workers = 0,
                                         const std::vector<SplitEvaluation>& lower_p = {}) {
    SplitEvaluator eval = [&](const BudgetSplit& split) {
        return run_multiphase(idx, split, spec, workers);
    };
    return search_with_evaluator(plan, eval, lower_p);
}

}  // namespace phasecast

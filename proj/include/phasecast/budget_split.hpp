#pragma once

#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "phasecast/errors.hpp"

namespace phasecast {

/// Allocation (k_1,...,k_p) of a total seeding budget across p phases.
struct BudgetSplit {
    std::vector<int> allocations;

    BudgetSplit() = default;
    explicit BudgetSplit(std::vector<int> alloc) : allocations(std::move(alloc)) {}

    int phases() const { return static_cast<int>(allocations.size()); }
    int total() const { return std::accumulate(allocations.begin(), allocations.end(), 0); }

    /// Throws unless p >= 1, every allocation >= 0, and the sum equals k.
    void validate(int k) const {
        if (allocations.empty()) throw ValidationError("budget split needs at least one phase");
        for (int a : allocations)
            if (a < 0) throw ValidationError("budget split has a negative allocation");
        if (total() != k)
            throw ValidationError("budget split sums to " + std::to_string(total()) +
                                  ", expected " + std::to_string(k));
    }

    std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < allocations.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(allocations[i]);
        }
        return s;
    }

    static BudgetSplit parse(const std::string& text) {
        BudgetSplit k;
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t pos = 0;
                int v = std::stoi(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
                k.allocations.push_back(v);
            } catch (const std::exception&) {
                throw ValidationError("unparsable budget split component '" + tok + "'");
            }
        }
        if (k.allocations.empty()) throw ValidationError("empty budget split");
        return k;
    }

    bool operator==(const BudgetSplit& o) const { return allocations == o.allocations; }
    bool operator<(const BudgetSplit& o) const { return allocations < o.allocations; }
};

}  // namespace phasecast

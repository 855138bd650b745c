#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace phasecast {

/// Spread samples over an ensemble: one integer size per live graph, plus
/// derived mean / sample stddev and an exact integer histogram (no binning).
struct SpreadStats {
    std::vector<std::int32_t> sizes;
    double mean = 0.0;
    double stddev = 0.0;  // sample (n-1) estimator; 0 when fewer than 2 samples

    std::map<std::int32_t, std::int64_t> histogram() const {
        std::map<std::int32_t, std::int64_t> h;
        for (auto s : sizes) ++h[s];
        return h;
    }
};

/// Mean/stddev from integer samples via exact integer sums, so the result is
/// independent of accumulation order.
inline SpreadStats make_spread_stats(std::vector<std::int32_t> sizes) {
    SpreadStats st;
    st.sizes = std::move(sizes);
    const std::size_t n = st.sizes.size();
    if (n == 0) return st;
    std::int64_t sum = 0;
    std::int64_t sum_sq = 0;
    for (auto s : st.sizes) {
        sum += s;
        sum_sq += static_cast<std::int64_t>(s) * s;
    }
    st.mean = static_cast<double>(sum) / static_cast<double>(n);
    if (n >= 2) {
        double num = static_cast<double>(sum_sq) -
                     static_cast<double>(sum) * static_cast<double>(sum) / static_cast<double>(n);
        if (num < 0) num = 0;  // guard tiny negative from rounding
        st.stddev = std::sqrt(num / static_cast<double>(n - 1));
    }
    return st;
}

}  // namespace phasecast

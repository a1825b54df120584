#include "fedagg/changepoint.hpp"

#include <limits>

namespace fedagg {

FilterOutcome filter_extreme_values(std::span<const double> row) {
    const std::size_t m = row.size();
    if (m < 2) {
        return {std::vector<double>(row.begin(), row.end()), 0,
                std::numeric_limits<double>::infinity()};
    }
    const std::size_t mid = m / 2 - 1;  // lower median, 0-based
    const double median = row[mid];
    const double delta_max = median - row.front();
    const double tau = median + delta_max;

    std::size_t kept_count = m;
    for (std::size_t j = mid + 1; j < m; ++j) {
        if (row[j] > tau) {
            kept_count = j;  // truncate at the first exceedance
            break;
        }
    }
    return {std::vector<double>(row.begin(), row.begin() + kept_count),
            m - kept_count, tau};
}

SseSplit sse_split(std::span<const double> row) {
    const std::size_t m = row.size();
    if (m < 2)
        return {m, 0.0, 0.0};

    // Prefix sums of values shifted by row[0]. The shift cancels in each
    // segment's SSE and makes constant rows come out exactly zero.
    std::vector<double> sum(m + 1, 0.0), sumsq(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double y = row[i] - row.front();
        sum[i + 1] = sum[i] + y;
        sumsq[i + 1] = sumsq[i] + y * y;
    }
    const auto segment_sse = [&](std::size_t a, std::size_t b) {
        const double s = sum[b] - sum[a];
        const double q = sumsq[b] - sumsq[a];
        const double sse = q - s * s / static_cast<double>(b - a);
        return sse > 0.0 ? sse : 0.0;
    };

    SseSplit best{1, 0.0, 0.0};
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < m; ++k) {
        const double left = segment_sse(0, k);
        const double right = segment_sse(k, m);
        if (left + right <= best_total) {  // '<=' keeps the largest k on ties
            best_total = left + right;
            best = {k, left, right};
        }
    }
    return best;
}

ByzantineEstimate estimate_f(std::span<const double> row, bool use_filter) {
    const std::size_t m = row.size();
    ByzantineEstimate est;
    if (m < 4) {
        est.degenerate = true;
        est.sse_change_point = m;
        return est;
    }

    if (!use_filter) {
        const SseSplit s = sse_split(row);
        est.sse_change_point = s.split;
        est.left_sse = s.left_sse;
        est.right_sse = s.right_sse;
        est.f_hat = m - s.split;
        return est;
    }

    const FilterOutcome filtered = filter_extreme_values(row);
    est.removed_by_filter = filtered.removed_count;
    const std::size_t kept = filtered.kept.size();
    if (kept < 4) {
        // Remainder too short to segment; only the filtered tail counts.
        est.degenerate = true;
        est.sse_change_point = kept;
        est.f_hat = filtered.removed_count;
        return est;
    }
    const SseSplit s = sse_split(filtered.kept);
    est.sse_change_point = s.split;
    est.left_sse = s.left_sse;
    est.right_sse = s.right_sse;
    est.f_hat = filtered.removed_count + (kept - s.split);
    return est;
}

}  // namespace fedagg

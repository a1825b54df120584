#pragma once

#include <span>
#include <vector>

#include "fedagg/types.hpp"

namespace fedagg {

/// Result of the median-threshold extreme-value filter.
struct FilterOutcome {
    std::vector<double> kept;     // prefix of the input row
    std::size_t removed_count = 0;
    double threshold = 0.0;       // tau = median + (median - smallest)
};

/// Drops the extreme tail of a sorted distance row. The lower median (element
/// floor(m/2) in 1-based terms) anchors the threshold tau = 2*median - row[0];
/// scanning right of the median, everything from the first exceedance onward
/// is removed. Rows shorter than 2 come back unchanged.
FilterOutcome filter_extreme_values(std::span<const double> row);

/// Least-squares change point of a sorted row.
struct SseSplit {
    std::size_t split = 0;   // left-segment length, in 1..m-1 (m when degenerate)
    double left_sse = 0.0;
    double right_sse = 0.0;
};

/// Minimizes SSE(row[0..k)) + SSE(row[k..m)) over all k in 1..m-1, where SSE
/// is the within-segment sum of squared deviations from the segment mean.
/// Ties resolve to the largest k (fewest suspected Byzantine entries).
SseSplit sse_split(std::span<const double> row);

/// Estimates the Byzantine count from one sorted distance row. With
/// `use_filter` set, extreme values are removed first and count toward the
/// estimate; the change-point term is then taken on the remainder. Arrays
/// shorter than 4 (raw or post-filter) are too short to segment and
/// contribute no change-point term.
ByzantineEstimate estimate_f(std::span<const double> row, bool use_filter);

}  // namespace fedagg

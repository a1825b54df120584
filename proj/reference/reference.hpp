#pragma once

#include <cstddef>
#include <vector>

// Serial reference implementations used as oracles by the tests, the CLI's
// `oracle` subcommand and the kernel benchmark. Deliberately naive and kept
// independent of the main library.
namespace fedref {

/// Full n x n squared-distance table, every entry recomputed from scratch.
std::vector<std::vector<double>> pairwise_sq_distances(
    const std::vector<std::vector<double>>& updates);

struct KrumResult {
    std::size_t selected = 0;
    std::vector<double> scores;
};

/// Brute-force Krum: per client, gather distances to everyone else, sort,
/// sum the first n-f-2, pick the lowest score (lowest index on ties).
KrumResult krum_select(const std::vector<std::vector<double>>& updates, std::size_t f);

/// Line-by-line interpreter of the median-threshold filter pseudocode over a
/// 1-based array. Input must be sorted ascending with at least 2 entries.
std::vector<double> filter_interpreter(const std::vector<double>& row);

struct SseSplitResult {
    std::size_t split = 0;  // left-segment length
    double left_sse = 0.0;
    double right_sse = 0.0;
};

/// Exhaustive O(m^2) split search; each segment's SSE is computed directly
/// as sum((x - mean)^2). Ties resolve to the largest split.
SseSplitResult sse_split_bruteforce(const std::vector<double>& row);

/// Coordinate-wise mean, plain double loop.
std::vector<double> mean(const std::vector<std::vector<double>>& updates);

}  // namespace fedref

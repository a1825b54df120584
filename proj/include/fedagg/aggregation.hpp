#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fedagg/types.hpp"

namespace fedagg {

/// Squared Euclidean distances between every pair of updates. Rows are
/// computed in parallel; each entry is a sequential sum over coordinates so
/// results do not depend on the thread count.
DistanceMatrix pairwise_sq_distances(const UpdateSet& set);

/// The n-1 off-diagonal entries of row i, ascending. Ties keep the lower
/// original client index first (stable sort).
std::vector<double> sorted_row(const DistanceMatrix& matrix, std::size_t i);

struct KrumScore {
    double score = 0.0;
    std::size_t neighbor_count = 0;
    bool clamped = false;
};

/// Sum of the first max(1, n-f-2) entries of a sorted distance row, summed
/// left to right. Clamping to one neighbor is flagged.
KrumScore krum_score(std::span<const double> row, std::size_t f, std::size_t n);

/// Per-client Krum scores with their neighbor index sets, for a known f.
std::vector<ScoredClient> krum_scores(const DistanceMatrix& matrix, std::size_t f);

/// Coordinate-wise mean of the m updates nearest to `center` (ordered by
/// distance, then by client index; the center's own zero distance sorts it
/// in). Summation runs in ascending client-index order.
UpdateVector neighbor_average(const UpdateSet& set, const DistanceMatrix& matrix,
                              std::size_t center, std::size_t m);

/// Coordinate-wise mean of all updates.
AggregationResult aggregate_mean(const UpdateSet& set);

/// Classic Krum: the update with the smallest score wins verbatim.
/// Requires 2 + 2f < n.
AggregationResult aggregate_krum(const UpdateSet& set, std::size_t f);

/// Multi-Krum: Krum winner, then the mean of the n-f updates nearest to it.
AggregationResult aggregate_mkrum(const UpdateSet& set, std::size_t f);

/// Krum with f estimated per client by least-squares change-point detection
/// on its sorted distance row (no extreme-value filter). Winner verbatim.
AggregationResult aggregate_rkrum(const UpdateSet& set);

struct ArkrumOptions {
    bool use_filter = true;                 // median filter before estimation
    std::optional<std::size_t> forced_f;    // override every client's estimate
};

/// Parameter-free robust aggregation: per-client f estimated after median
/// filtering, scores over the unfiltered sorted rows, then the mean of the
/// max(1, n - f_hat) updates nearest to the winner. Indistinguishable inputs
/// (all pairwise distances zero) average everything.
AggregationResult aggregate_arkrum(const UpdateSet& set);
AggregationResult aggregate_arkrum(const UpdateSet& set, const ArkrumOptions& options);

namespace detail {
/// Row i as (distance, client index) pairs, ascending by distance then index.
std::vector<std::pair<double, std::size_t>> sorted_row_indexed(
    const DistanceMatrix& matrix, std::size_t i);
}  // namespace detail

}  // namespace fedagg

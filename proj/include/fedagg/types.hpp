#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fedagg {

/// A client's flattened model update, dimension d.
using UpdateVector = std::vector<double>;

/// Thrown when a Krum-family tolerance constraint (2 + 2f < n) is violated.
class ConstraintViolation : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// One round's worth of client updates, in canonical client-index order.
struct UpdateSet {
    std::vector<UpdateVector> updates;

    std::size_t size() const { return updates.size(); }
    std::size_t dim() const { return updates.empty() ? 0 : updates.front().size(); }
};

/// Rejects empty sets, dimension mismatches and non-finite values; the
/// offending client index is named in the message.
void validate(const UpdateSet& set);

/// n x n matrix of squared Euclidean distances; symmetric, zero diagonal.
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> entries;  // row-major n*n

    double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return entries[i * n + j]; }
};

/// A client's Krum score together with the neighbor set it was summed over.
struct ScoredClient {
    std::size_t index = 0;
    double score = 0.0;
    std::vector<std::size_t> neighbor_indices;
    bool clamped = false;  // neighbor window was clamped up to 1
};

/// Byzantine-count estimate for one distance row: the filter's removal count
/// plus the change-point term on the remainder. Both terms are kept so runs
/// can report them separately.
struct ByzantineEstimate {
    std::size_t f_hat = 0;
    std::size_t removed_by_filter = 0;
    std::size_t sse_change_point = 0;  // left-segment length on the segmented array
    double left_sse = 0.0;
    double right_sse = 0.0;
    bool degenerate = false;  // too few points to segment meaningfully
};

/// Output of any aggregation rule.
struct AggregationResult {
    UpdateVector aggregate;
    std::optional<std::size_t> selected_index;    // Krum-family winner
    std::vector<std::size_t> averaged_indices;    // ascending; what the aggregate averages
    std::vector<ByzantineEstimate> estimates;     // per client; rkrum/arkrum only
    bool clamped_window = false;                  // some client's score window hit the clamp
};

}  // namespace fedagg

#include "fedagg/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fedagg/changepoint.hpp"

namespace fedagg {

void validate(const UpdateSet& set) {
    if (set.updates.empty())
        throw std::invalid_argument("update set is empty");
    const std::size_t d = set.updates.front().size();
    if (d == 0)
        throw std::invalid_argument("updates have dimension 0");
    for (std::size_t i = 0; i < set.updates.size(); ++i) {
        const auto& u = set.updates[i];
        if (u.size() != d)
            throw std::invalid_argument(
                "dimension mismatch: client " + std::to_string(i) + " sent " +
                std::to_string(u.size()) + " values, expected " + std::to_string(d));
        for (double v : u) {
            if (!std::isfinite(v))
                throw std::invalid_argument(
                    "non-finite value in update from client " + std::to_string(i));
        }
    }
}

DistanceMatrix pairwise_sq_distances(const UpdateSet& set) {
    validate(set);
    const std::size_t n = set.size();
    const std::size_t d = set.dim();
    DistanceMatrix mat{n, std::vector<double>(n * n, 0.0)};

#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = set.updates[i].data();
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* b = set.updates[j].data();
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = a[k] - b[k];
                acc += diff * diff;
            }
            mat.at(i, j) = acc;
            mat.at(j, i) = acc;
        }
    }
    return mat;
}

std::vector<double> sorted_row(const DistanceMatrix& matrix, std::size_t i) {
    if (i >= matrix.n)
        throw std::out_of_range("row index " + std::to_string(i) + " out of range");
    std::vector<double> row;
    row.reserve(matrix.n - 1);
    for (std::size_t j = 0; j < matrix.n; ++j)
        if (j != i)
            row.push_back(matrix.at(i, j));
    std::stable_sort(row.begin(), row.end());
    return row;
}

namespace detail {

std::vector<std::pair<double, std::size_t>> sorted_row_indexed(
    const DistanceMatrix& matrix, std::size_t i) {
    std::vector<std::pair<double, std::size_t>> row;
    row.reserve(matrix.n - 1);
    for (std::size_t j = 0; j < matrix.n; ++j)
        if (j != i)
            row.emplace_back(matrix.at(i, j), j);
    std::stable_sort(row.begin(), row.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return row;
}

}  // namespace detail

KrumScore krum_score(std::span<const double> row, std::size_t f, std::size_t n) {
    if (row.size() + 1 != n)
        throw std::invalid_argument("sorted row must have n-1 entries");
    std::size_t window = (n >= f + 3) ? n - f - 2 : 0;
    const bool clamped = window < 1;
    if (clamped)
        window = 1;
    double score = 0.0;
    for (std::size_t k = 0; k < window; ++k)
        score += row[k];
    return {score, window, clamped};
}

std::vector<ScoredClient> krum_scores(const DistanceMatrix& matrix, std::size_t f) {
    const std::size_t n = matrix.n;
    std::vector<ScoredClient> scored(n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = detail::sorted_row_indexed(matrix, i);
        std::size_t window = (n >= f + 3) ? n - f - 2 : 0;
        const bool clamped = window < 1;
        if (clamped)
            window = 1;
        ScoredClient sc;
        sc.index = i;
        sc.clamped = clamped;
        sc.neighbor_indices.reserve(window);
        for (std::size_t k = 0; k < window; ++k) {
            sc.score += row[k].first;
            sc.neighbor_indices.push_back(row[k].second);
        }
        scored[i] = std::move(sc);
    }
    return scored;
}

namespace {

std::size_t argmin_score(const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] < scores[best])
            best = i;  // strict '<' keeps the lowest index on ties
    return best;
}

// Indices of the m clients nearest to `center`, ascending.
std::vector<std::size_t> nearest_indices(const DistanceMatrix& matrix,
                                         std::size_t center, std::size_t m) {
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(matrix.n);
    for (std::size_t j = 0; j < matrix.n; ++j)
        order.emplace_back(matrix.at(center, j), j);
    std::sort(order.begin(), order.end());
    std::vector<std::size_t> picked(m);
    for (std::size_t k = 0; k < m; ++k)
        picked[k] = order[k].second;
    std::sort(picked.begin(), picked.end());
    return picked;
}

UpdateVector mean_of(const UpdateSet& set, const std::vector<std::size_t>& indices) {
    const std::size_t d = set.dim();
    UpdateVector avg(d, 0.0);
    for (std::size_t idx : indices) {
        const auto& u = set.updates[idx];
        for (std::size_t k = 0; k < d; ++k)
            avg[k] += u[k];
    }
    const double count = static_cast<double>(indices.size());
    for (double& v : avg)
        v /= count;
    return avg;
}

void check_krum_constraint(std::size_t f, std::size_t n, const char* rule) {
    if (2 + 2 * f >= n)
        throw ConstraintViolation(std::string(rule) +
                                  " requires 2 + 2f < n, violated by f=" +
                                  std::to_string(f) + ", n=" + std::to_string(n));
}

}  // namespace

UpdateVector neighbor_average(const UpdateSet& set, const DistanceMatrix& matrix,
                              std::size_t center, std::size_t m) {
    if (center >= set.size())
        throw std::out_of_range("center index out of range");
    if (m < 1 || m > set.size())
        throw std::invalid_argument("neighbor count " + std::to_string(m) +
                                    " out of range [1, " +
                                    std::to_string(set.size()) + "]");
    return mean_of(set, nearest_indices(matrix, center, m));
}

AggregationResult aggregate_mean(const UpdateSet& set) {
    validate(set);
    AggregationResult result;
    result.averaged_indices.resize(set.size());
    for (std::size_t i = 0; i < set.size(); ++i)
        result.averaged_indices[i] = i;
    result.aggregate = mean_of(set, result.averaged_indices);
    return result;
}

AggregationResult aggregate_krum(const UpdateSet& set, std::size_t f) {
    validate(set);
    check_krum_constraint(f, set.size(), "Krum");
    const DistanceMatrix mat = pairwise_sq_distances(set);
    const auto scored = krum_scores(mat, f);
    std::vector<double> scores(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i)
        scores[i] = scored[i].score;
    const std::size_t winner = argmin_score(scores);

    AggregationResult result;
    result.aggregate = set.updates[winner];  // verbatim
    result.selected_index = winner;
    result.averaged_indices = {winner};
    return result;
}

AggregationResult aggregate_mkrum(const UpdateSet& set, std::size_t f) {
    validate(set);
    check_krum_constraint(f, set.size(), "Multi-Krum");
    const DistanceMatrix mat = pairwise_sq_distances(set);
    const auto scored = krum_scores(mat, f);
    std::vector<double> scores(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i)
        scores[i] = scored[i].score;
    const std::size_t winner = argmin_score(scores);

    AggregationResult result;
    result.selected_index = winner;
    result.averaged_indices = nearest_indices(mat, winner, set.size() - f);
    result.aggregate = mean_of(set, result.averaged_indices);
    return result;
}

AggregationResult aggregate_rkrum(const UpdateSet& set) {
    validate(set);
    const std::size_t n = set.size();
    if (n < 4)
        throw std::invalid_argument("rKrum needs at least 4 clients, got " +
                                    std::to_string(n));
    const DistanceMatrix mat = pairwise_sq_distances(set);

    std::vector<double> scores(n);
    std::vector<ByzantineEstimate> estimates(n);
    std::vector<unsigned char> clamped(n, 0);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = sorted_row(mat, i);
        estimates[i] = estimate_f(row, /*use_filter=*/false);
        const KrumScore ks = krum_score(row, estimates[i].f_hat, n);
        scores[i] = ks.score;
        clamped[i] = ks.clamped;
    }
    const std::size_t winner = argmin_score(scores);

    AggregationResult result;
    result.aggregate = set.updates[winner];  // verbatim
    result.selected_index = winner;
    result.averaged_indices = {winner};
    result.estimates = std::move(estimates);
    result.clamped_window =
        std::any_of(clamped.begin(), clamped.end(), [](unsigned char c) { return c; });
    return result;
}

AggregationResult aggregate_arkrum(const UpdateSet& set) {
    return aggregate_arkrum(set, ArkrumOptions{});
}

AggregationResult aggregate_arkrum(const UpdateSet& set, const ArkrumOptions& options) {
    validate(set);
    const std::size_t n = set.size();
    if (n < 4)
        throw std::invalid_argument("ArKrum needs at least 4 clients, got " +
                                    std::to_string(n));
    const DistanceMatrix mat = pairwise_sq_distances(set);

    std::vector<double> scores(n);
    std::vector<ByzantineEstimate> estimates(n);
    std::vector<unsigned char> clamped(n, 0);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = sorted_row(mat, i);
        if (options.forced_f) {
            estimates[i] = ByzantineEstimate{};
            estimates[i].f_hat = *options.forced_f;
        } else {
            estimates[i] = estimate_f(row, options.use_filter);
        }
        const KrumScore ks = krum_score(row, estimates[i].f_hat, n);
        scores[i] = ks.score;
        clamped[i] = ks.clamped;
    }
    const std::size_t winner = argmin_score(scores);

    const std::size_t f_winner = estimates[winner].f_hat;
    std::size_t keep = f_winner < n ? n - f_winner : 1;  // max(1, n - f_hat)
    if (!options.forced_f) {
        // Indistinguishable updates: all pairwise distances zero, average everyone.
        const bool all_zero =
            std::all_of(mat.entries.begin(), mat.entries.end(),
                        [](double v) { return v == 0.0; });
        if (all_zero)
            keep = n;
    }

    AggregationResult result;
    result.selected_index = winner;
    result.averaged_indices = nearest_indices(mat, winner, keep);
    result.aggregate = mean_of(set, result.averaged_indices);
    result.estimates = std::move(estimates);
    result.clamped_window =
        std::any_of(clamped.begin(), clamped.end(), [](unsigned char c) { return c; });
    return result;
}

}  // namespace fedagg

#include "reference.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace fedref {

std::vector<std::vector<double>> pairwise_sq_distances(
    const std::vector<std::vector<double>>& updates) {
    const std::size_t n = updates.size();
    std::vector<std::vector<double>> table(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < updates[i].size(); ++k) {
                const double diff = updates[i][k] - updates[j][k];
                acc += diff * diff;
            }
            table[i][j] = acc;
        }
    return table;
}

KrumResult krum_select(const std::vector<std::vector<double>>& updates, std::size_t f) {
    const std::size_t n = updates.size();
    if (2 + 2 * f >= n)
        throw std::invalid_argument("krum_select: 2 + 2f < n violated");

    KrumResult result;
    result.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> dists;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            double acc = 0.0;
            for (std::size_t k = 0; k < updates[i].size(); ++k) {
                const double diff = updates[i][k] - updates[j][k];
                acc += diff * diff;
            }
            dists.push_back(acc);
        }
        std::sort(dists.begin(), dists.end());
        double score = 0.0;
        for (std::size_t k = 0; k < n - f - 2; ++k)
            score += dists[k];
        result.scores[i] = score;
    }
    result.selected = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (result.scores[i] < result.scores[result.selected])
            result.selected = i;
    return result;
}

std::vector<double> filter_interpreter(const std::vector<double>& row) {
    const std::size_t n = row.size();
    if (n < 2)
        throw std::invalid_argument("filter_interpreter: need at least 2 entries");

    // 1-based copy so the body reads like the pseudocode.
    std::vector<double> d(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i)
        d[i] = row[i - 1];

    const std::size_t mid = n / 2;
    const double median = d[mid];
    const double delta_max = median - d[1];
    const double tau = median + delta_max;
    std::size_t j_max = n;
    for (std::size_t j = mid + 1; j <= n; ++j) {
        if (d[j] > tau) {
            j_max = j - 1;
            break;
        }
    }
    const std::size_t n_prime = j_max;
    return std::vector<double>(row.begin(), row.begin() + n_prime);
}

SseSplitResult sse_split_bruteforce(const std::vector<double>& row) {
    const std::size_t m = row.size();
    if (m < 2)
        return {m, 0.0, 0.0};

    const auto segment_sse = [&](std::size_t a, std::size_t b) {
        double sum = 0.0;
        for (std::size_t i = a; i < b; ++i)
            sum += row[i];
        const double mean = sum / static_cast<double>(b - a);
        double sse = 0.0;
        for (std::size_t i = a; i < b; ++i)
            sse += (row[i] - mean) * (row[i] - mean);
        return sse;
    };

    SseSplitResult best{1, 0.0, 0.0};
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < m; ++k) {
        const double left = segment_sse(0, k);
        const double right = segment_sse(k, m);
        if (left + right <= best_total) {  // largest split wins ties
            best_total = left + right;
            best = {k, left, right};
        }
    }
    return best;
}

std::vector<double> mean(const std::vector<std::vector<double>>& updates) {
    const std::size_t n = updates.size();
    const std::size_t dim = updates.front().size();
    std::vector<double> avg(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dim; ++k)
            avg[k] += updates[i][k];
    for (double& v : avg)
        v /= static_cast<double>(n);
    return avg;
}

}  // namespace fedref

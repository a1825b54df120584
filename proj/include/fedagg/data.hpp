#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedagg/rng.hpp"

namespace fedagg {

/// In-memory dataset: row-major feature matrix plus integer labels 0..C-1.
struct Dataset {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::size_t classes = 0;
    std::vector<double> features;  // n * dim
    std::vector<int> labels;       // n

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }
};

struct PartitionSpec {
    std::size_t n_clients = 1;
    double alpha = 10.0;      // Dirichlet concentration
    std::uint64_t seed = 0;
};

/// Row indices owned by one client.
using ClientShard = std::vector<std::size_t>;

/// Splits sample indices across clients, one Dirichlet draw per class.
/// Class-c indices are shuffled and dealt out by largest-remainder quotas, so
/// shard sizes sum to the dataset size exactly. Empty shards are repaired by
/// taking one sample from the largest shard.
std::vector<ClientShard> dirichlet_partition(const Dataset& dataset,
                                             const PartitionSpec& spec);

/// Gaussian blobs with unit covariance; class means sit on scaled coordinate
/// axes so every pair of means is exactly `separation` apart. Needs
/// dim >= classes.
Dataset generate_synthetic(std::size_t classes, std::size_t dim,
                           std::size_t per_class, double separation, Rng& rng);

/// Loads an IDX image/label file pair (big-endian magic 0x803 / 0x801).
/// Pixels are flattened and scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Loads rows of d floats plus a trailing integer label; an optional header
/// line is skipped. The class count is inferred from the largest label.
Dataset load_feature_csv(const std::string& path);

/// Seeded-shuffle split; the second part holds `test_fraction` of the rows.
std::pair<Dataset, Dataset> train_test_split(const Dataset& dataset,
                                             double test_fraction, Rng& rng);

}  // namespace fedagg

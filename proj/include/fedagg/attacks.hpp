#pragma once

#include <map>

#include "fedagg/data.hpp"
#include "fedagg/rng.hpp"
#include "fedagg/types.hpp"

namespace fedagg {

enum class AttackKind { none, large_outlier, noise_injection, label_flipping };

struct AttackSpec {
    AttackKind kind = AttackKind::none;
    double mu = 0.0;
    double sigma = 0.0;
    std::map<int, int> label_map;

    /// Spec with the per-kind default parameters (outlier sigma 10, noise
    /// sigma 1, both zero-mean).
    static AttackSpec make(AttackKind kind);
};

/// A Byzantine update drawn coordinate-wise from Normal(mu, sigma^2),
/// replacing whatever the client would have trained.
UpdateVector forge_outlier_update(std::size_t dim, const AttackSpec& spec, Rng& rng);

/// Adds Normal(mu, sigma^2) noise to an honestly trained update.
UpdateVector inject_noise(const UpdateVector& update, const AttackSpec& spec, Rng& rng);

/// Applies the label map simultaneously (no chained flips); labels outside
/// the map's domain and all features are untouched. Map images must lie in
/// the dataset's label alphabet.
Dataset flip_labels(const Dataset& dataset, const std::map<int, int>& label_map);

}  // namespace fedagg

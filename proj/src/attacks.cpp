#include "fedagg/attacks.hpp"

#include <stdexcept>
#include <string>

namespace fedagg {

AttackSpec AttackSpec::make(AttackKind kind) {
    AttackSpec spec;
    spec.kind = kind;
    switch (kind) {
        case AttackKind::large_outlier:
            spec.sigma = 10.0;
            break;
        case AttackKind::noise_injection:
            spec.sigma = 1.0;
            break;
        default:
            break;
    }
    return spec;
}

UpdateVector forge_outlier_update(std::size_t dim, const AttackSpec& spec, Rng& rng) {
    if (spec.kind != AttackKind::large_outlier)
        throw std::invalid_argument("forge_outlier_update needs a large_outlier spec");
    UpdateVector forged(dim);
    for (double& v : forged)
        v = rng.normal(spec.mu, spec.sigma);
    return forged;
}

UpdateVector inject_noise(const UpdateVector& update, const AttackSpec& spec, Rng& rng) {
    if (spec.kind != AttackKind::noise_injection)
        throw std::invalid_argument("inject_noise needs a noise_injection spec");
    UpdateVector noisy(update.size());
    for (std::size_t k = 0; k < update.size(); ++k)
        noisy[k] = update[k] + rng.normal(spec.mu, spec.sigma);
    return noisy;
}

Dataset flip_labels(const Dataset& dataset, const std::map<int, int>& label_map) {
    for (const auto& [from, to] : label_map) {
        if (to < 0 || to >= static_cast<int>(dataset.classes))
            throw std::invalid_argument("label map image " + std::to_string(to) +
                                        " outside the label alphabet 0.." +
                                        std::to_string(dataset.classes - 1));
        if (from < 0 || from >= static_cast<int>(dataset.classes))
            throw std::invalid_argument("label map source " + std::to_string(from) +
                                        " outside the label alphabet");
    }
    Dataset flipped = dataset;
    for (int& label : flipped.labels) {
        const auto it = label_map.find(label);
        if (it != label_map.end())
            label = it->second;
    }
    return flipped;
}

}  // namespace fedagg

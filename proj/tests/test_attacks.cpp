#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedagg/attacks.hpp"

using namespace fedagg;

namespace {

Dataset tiny_dataset(std::vector<int> labels, std::size_t classes) {
    Dataset d;
    d.n = labels.size();
    d.dim = 2;
    d.classes = classes;
    d.labels = std::move(labels);
    d.features.resize(d.n * d.dim);
    for (std::size_t i = 0; i < d.features.size(); ++i)
        d.features[i] = 0.25 * static_cast<double>(i);
    return d;
}

}  // namespace

TEST_CASE("attack defaults follow the protocol") {
    const auto outlier = AttackSpec::make(AttackKind::large_outlier);
    CHECK(outlier.mu == 0.0);
    CHECK(outlier.sigma == 10.0);
    const auto noise = AttackSpec::make(AttackKind::noise_injection);
    CHECK(noise.mu == 0.0);
    CHECK(noise.sigma == 1.0);
}

TEST_CASE("forge_outlier_update: degenerate sigma gives the all-mu vector") {
    auto spec = AttackSpec::make(AttackKind::large_outlier);
    spec.mu = 3.0;
    spec.sigma = 0.0;
    Rng rng(5);
    CHECK(forge_outlier_update(4, spec, rng) == UpdateVector{3, 3, 3, 3});
}

TEST_CASE("forge_outlier_update: sample statistics at d=10000") {
    const auto spec = AttackSpec::make(AttackKind::large_outlier);
    Rng rng(11);
    const auto forged = forge_outlier_update(10000, spec, rng);
    double sum = 0.0;
    for (double v : forged)
        sum += v;
    const double mean = sum / 10000.0;
    CHECK(std::abs(mean) < 0.3);  // 3 sigma / sqrt(d)
    double var = 0.0;
    for (double v : forged)
        var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / 10000.0);
    CHECK(std::abs(stddev - 10.0) / 10.0 < 0.05);
}

TEST_CASE("forge_outlier_update: fixed seed reproduces bits") {
    const auto spec = AttackSpec::make(AttackKind::large_outlier);
    Rng a(99), b(99);
    CHECK(forge_outlier_update(64, spec, a) == forge_outlier_update(64, spec, b));
    CHECK_THROWS_AS(forge_outlier_update(4, AttackSpec::make(AttackKind::none), a),
                    std::invalid_argument);
}

TEST_CASE("inject_noise: zero sigma is the identity") {
    auto spec = AttackSpec::make(AttackKind::noise_injection);
    spec.sigma = 0.0;
    Rng rng(1);
    const UpdateVector u{1.5, -2.25, 0.0};
    CHECK(inject_noise(u, spec, rng) == u);
}

TEST_CASE("inject_noise: additive noise is centered") {
    const auto spec = AttackSpec::make(AttackKind::noise_injection);
    Rng rng(17);
    UpdateVector u(10000, 7.0);
    const auto noisy = inject_noise(u, spec, rng);
    double shift = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k)
        shift += noisy[k] - u[k];
    CHECK(std::abs(shift / 10000.0) < 0.03);

    Rng again(17);
    CHECK(inject_noise(u, spec, again) == noisy);
}

TEST_CASE("flip_labels: digit map is one-directional") {
    const auto data = tiny_dataset({0, 4, 7}, 10);
    const std::map<int, int> digit_map{{0, 9}, {1, 8}, {2, 7}, {3, 6}, {4, 5}};
    const auto flipped = flip_labels(data, digit_map);
    CHECK(flipped.labels == std::vector<int>{9, 5, 7});
    CHECK(flipped.features == data.features);
    CHECK(flipped.n == data.n);

    // Applying the map twice equals applying it once: images live outside the
    // domain, so the second pass is a no-op. Not an involution.
    const auto twice = flip_labels(flipped, digit_map);
    CHECK(twice.labels == flipped.labels);
}

TEST_CASE("flip_labels: binary map is an involution") {
    const auto data = tiny_dataset({0, 1, 1}, 2);
    const std::map<int, int> binary{{0, 1}, {1, 0}};
    const auto flipped = flip_labels(data, binary);
    CHECK(flipped.labels == std::vector<int>{1, 0, 0});
    CHECK(flip_labels(flipped, binary).labels == data.labels);
}

TEST_CASE("flip_labels: empty map changes nothing, bad image rejected") {
    const auto data = tiny_dataset({0, 1}, 2);
    CHECK(flip_labels(data, {}).labels == data.labels);
    CHECK_THROWS_AS(flip_labels(data, {{0, 5}}), std::invalid_argument);
    CHECK_THROWS_AS(flip_labels(data, {{7, 0}}), std::invalid_argument);
}

#pragma once

#include <span>
#include <vector>

#include "fedagg/data.hpp"
#include "fedagg/rng.hpp"
#include "fedagg/types.hpp"

namespace fedagg {

/// Fully connected network shape: layer_sizes runs input..output; hidden
/// layers use leaky ReLU, the output layer is linear logits.
struct ModelLayout {
    std::vector<std::size_t> layer_sizes;
    double leaky_slope = 0.2;

    std::size_t param_count() const;
};

struct LayerParams {
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> biases;   // out
};

struct ModelParams {
    ModelLayout layout;
    std::vector<LayerParams> layers;
};

/// Glorot-uniform weights, zero biases.
ModelParams init_model(const ModelLayout& layout, Rng& rng);

/// Activations per layer for one batch; acts[0] is the input, acts.back()
/// holds the logits.
struct ForwardCache {
    std::vector<std::vector<double>> acts;
    std::size_t batch = 0;
};

ForwardCache forward(const ModelParams& params, std::span<const double> features,
                     std::size_t batch);

/// Mean softmax cross-entropy of one batch.
double batch_cross_entropy(const ModelParams& params, std::span<const double> features,
                           std::span<const int> labels);

/// Gradient of the mean softmax cross-entropy w.r.t. every parameter.
std::vector<LayerParams> backward(const ModelParams& params,
                                  std::span<const double> features,
                                  std::span<const int> labels);

struct TrainConfig {
    std::size_t local_epochs = 5;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
};

/// Seeded-shuffle mini-batch SGD over the shard, starting from `global`.
/// The transmitted update is the full post-training parameter vector.
UpdateVector local_train(const ModelParams& global, const Dataset& data,
                         std::span<const std::size_t> shard, const TrainConfig& cfg,
                         Rng& rng);

/// Canonical layer-major, row-major flattening; unflatten is its exact inverse.
UpdateVector flatten(const ModelParams& params);
ModelParams unflatten(std::span<const double> vec, const ModelLayout& layout);

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};

/// Argmax accuracy (ties to the lower class index) and mean cross-entropy.
EvalResult evaluate(const ModelParams& params, const Dataset& dataset);

}  // namespace fedagg

#include "fedagg/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedagg {

namespace {

void check_layout(const ModelLayout& layout) {
    if (layout.layer_sizes.size() < 2)
        throw std::invalid_argument("layout needs at least input and output layers");
    for (std::size_t s : layout.layer_sizes)
        if (s == 0)
            throw std::invalid_argument("layer sizes must be positive");
    if (!std::isfinite(layout.leaky_slope))
        throw std::invalid_argument("leaky slope must be finite");
}

// Per-row softmax cross-entropy with max-shift; logits are B x C.
double row_cross_entropy(const double* logits, std::size_t classes, int label) {
    double max_logit = logits[0];
    for (std::size_t k = 1; k < classes; ++k)
        max_logit = std::max(max_logit, logits[k]);
    double sum_exp = 0.0;
    for (std::size_t k = 0; k < classes; ++k)
        sum_exp += std::exp(logits[k] - max_logit);
    return -(logits[label] - max_logit - std::log(sum_exp));
}

}  // namespace

std::size_t ModelLayout::param_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
        count += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
    return count;
}

ModelParams init_model(const ModelLayout& layout, Rng& rng) {
    check_layout(layout);
    ModelParams params;
    params.layout = layout;
    params.layers.resize(layout.layer_sizes.size() - 1);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const std::size_t fan_in = layout.layer_sizes[l];
        const std::size_t fan_out = layout.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        auto& layer = params.layers[l];
        layer.weights.resize(fan_out * fan_in);
        for (double& w : layer.weights)
            w = rng.uniform() * 2.0 * limit - limit;
        layer.biases.assign(fan_out, 0.0);
    }
    return params;
}

ForwardCache forward(const ModelParams& params, std::span<const double> features,
                     std::size_t batch) {
    const auto& sizes = params.layout.layer_sizes;
    if (features.size() != batch * sizes.front())
        throw std::invalid_argument("feature batch has wrong dimension: " +
                                    std::to_string(features.size()) + " values for " +
                                    std::to_string(batch) + " rows of width " +
                                    std::to_string(sizes.front()));
    const double slope = params.layout.leaky_slope;

    ForwardCache cache;
    cache.batch = batch;
    cache.acts.resize(sizes.size());
    cache.acts[0].assign(features.begin(), features.end());

    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        const auto& layer = params.layers[l];
        const std::vector<double>& prev = cache.acts[l];
        std::vector<double>& next = cache.acts[l + 1];
        next.resize(batch * out);
        const bool hidden = l + 1 < sizes.size() - 1;  // final layer stays linear
        for (std::size_t r = 0; r < batch; ++r) {
            const double* a = prev.data() + r * in;
            double* z = next.data() + r * out;
            for (std::size_t o = 0; o < out; ++o) {
                const double* w = layer.weights.data() + o * in;
                double acc = layer.biases[o];
                for (std::size_t k = 0; k < in; ++k)
                    acc += w[k] * a[k];
                z[o] = hidden && acc <= 0.0 ? slope * acc : acc;
            }
        }
    }
    return cache;
}

double batch_cross_entropy(const ModelParams& params, std::span<const double> features,
                           std::span<const int> labels) {
    const std::size_t batch = labels.size();
    const std::size_t classes = params.layout.layer_sizes.back();
    const ForwardCache cache = forward(params, features, batch);
    const auto& logits = cache.acts.back();
    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r)
        total += row_cross_entropy(logits.data() + r * classes, classes, labels[r]);
    return total / static_cast<double>(batch);
}

std::vector<LayerParams> backward(const ModelParams& params,
                                  std::span<const double> features,
                                  std::span<const int> labels) {
    const auto& sizes = params.layout.layer_sizes;
    const std::size_t batch = labels.size();
    const std::size_t classes = sizes.back();
    for (int label : labels)
        if (label < 0 || label >= static_cast<int>(classes))
            throw std::invalid_argument("label " + std::to_string(label) +
                                        " out of range for " + std::to_string(classes) +
                                        " classes");
    const ForwardCache cache = forward(params, features, batch);
    const double slope = params.layout.leaky_slope;
    const double inv_batch = 1.0 / static_cast<double>(batch);

    // delta at the output: (softmax - onehot) / batch
    std::vector<double> delta(batch * classes);
    const auto& logits = cache.acts.back();
    for (std::size_t r = 0; r < batch; ++r) {
        const double* z = logits.data() + r * classes;
        double* g = delta.data() + r * classes;
        double max_logit = z[0];
        for (std::size_t k = 1; k < classes; ++k)
            max_logit = std::max(max_logit, z[k]);
        double sum_exp = 0.0;
        for (std::size_t k = 0; k < classes; ++k)
            sum_exp += std::exp(z[k] - max_logit);
        for (std::size_t k = 0; k < classes; ++k)
            g[k] = std::exp(z[k] - max_logit) / sum_exp * inv_batch;
        g[labels[r]] -= inv_batch;
    }

    std::vector<LayerParams> grads(params.layers.size());
    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const std::size_t in = sizes[li];
        const std::size_t out = sizes[li + 1];
        const std::vector<double>& prev = cache.acts[li];
        auto& grad = grads[li];
        grad.weights.assign(out * in, 0.0);
        grad.biases.assign(out, 0.0);
        for (std::size_t r = 0; r < batch; ++r) {
            const double* a = prev.data() + r * in;
            const double* g = delta.data() + r * out;
            for (std::size_t o = 0; o < out; ++o) {
                double* dw = grad.weights.data() + o * in;
                for (std::size_t k = 0; k < in; ++k)
                    dw[k] += g[o] * a[k];
                grad.biases[o] += g[o];
            }
        }
        if (li > 0) {
            // Propagate through the layer's weights and the leaky ReLU below.
            std::vector<double> next_delta(batch * in, 0.0);
            const auto& layer = params.layers[li];
            for (std::size_t r = 0; r < batch; ++r) {
                const double* g = delta.data() + r * out;
                const double* a = prev.data() + r * in;
                double* nd = next_delta.data() + r * in;
                for (std::size_t o = 0; o < out; ++o) {
                    const double* w = layer.weights.data() + o * in;
                    for (std::size_t k = 0; k < in; ++k)
                        nd[k] += g[o] * w[k];
                }
                for (std::size_t k = 0; k < in; ++k)
                    nd[k] *= a[k] > 0.0 ? 1.0 : slope;
            }
            delta = std::move(next_delta);
        }
    }
    return grads;
}

UpdateVector local_train(const ModelParams& global, const Dataset& data,
                         std::span<const std::size_t> shard, const TrainConfig& cfg,
                         Rng& rng) {
    if (shard.empty())
        throw std::invalid_argument("cannot train on an empty shard");
    if (cfg.local_epochs < 1)
        throw std::invalid_argument("local_epochs must be at least 1");
    if (cfg.batch_size < 1)
        throw std::invalid_argument("batch_size must be at least 1");

    ModelParams local = global;
    const std::size_t dim = data.dim;
    std::vector<std::size_t> order(shard.begin(), shard.end());
    std::vector<double> batch_features;
    std::vector<int> batch_labels;

    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            batch_features.resize(count * dim);
            batch_labels.resize(count);
            for (std::size_t b = 0; b < count; ++b) {
                const auto row = data.row(order[start + b]);
                std::copy(row.begin(), row.end(), batch_features.begin() + b * dim);
                batch_labels[b] = data.labels[order[start + b]];
            }
            const auto grads = backward(local, batch_features, batch_labels);
            for (std::size_t l = 0; l < local.layers.size(); ++l) {
                auto& layer = local.layers[l];
                const auto& g = grads[l];
                for (std::size_t k = 0; k < layer.weights.size(); ++k)
                    layer.weights[k] -= cfg.learning_rate * g.weights[k];
                for (std::size_t k = 0; k < layer.biases.size(); ++k)
                    layer.biases[k] -= cfg.learning_rate * g.biases[k];
            }
        }
    }
    return flatten(local);
}

UpdateVector flatten(const ModelParams& params) {
    UpdateVector flat;
    flat.reserve(params.layout.param_count());
    for (const auto& layer : params.layers) {
        flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
        flat.insert(flat.end(), layer.biases.begin(), layer.biases.end());
    }
    return flat;
}

ModelParams unflatten(std::span<const double> vec, const ModelLayout& layout) {
    check_layout(layout);
    if (vec.size() != layout.param_count())
        throw std::invalid_argument("flat vector has " + std::to_string(vec.size()) +
                                    " values, layout needs " +
                                    std::to_string(layout.param_count()));
    ModelParams params;
    params.layout = layout;
    params.layers.resize(layout.layer_sizes.size() - 1);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const std::size_t in = layout.layer_sizes[l];
        const std::size_t out = layout.layer_sizes[l + 1];
        auto& layer = params.layers[l];
        layer.weights.assign(vec.begin() + offset, vec.begin() + offset + out * in);
        offset += out * in;
        layer.biases.assign(vec.begin() + offset, vec.begin() + offset + out);
        offset += out;
    }
    return params;
}

EvalResult evaluate(const ModelParams& params, const Dataset& dataset) {
    if (dataset.n == 0)
        throw std::invalid_argument("cannot evaluate on an empty dataset");
    const std::size_t classes = params.layout.layer_sizes.back();
    const std::size_t chunk = 256;
    const std::size_t chunks = (dataset.n + chunk - 1) / chunk;

    std::vector<double> losses(dataset.n);
    std::vector<unsigned char> correct(dataset.n);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * chunk;
        const std::size_t count = std::min(chunk, dataset.n - begin);
        const std::span<const double> rows{dataset.features.data() + begin * dataset.dim,
                                           count * dataset.dim};
        const ForwardCache cache = forward(params, rows, count);
        const auto& logits = cache.acts.back();
        for (std::size_t r = 0; r < count; ++r) {
            const double* z = logits.data() + r * classes;
            std::size_t pred = 0;
            for (std::size_t k = 1; k < classes; ++k)
                if (z[k] > z[pred])
                    pred = k;  // ties keep the lower class index
            correct[begin + r] = pred == static_cast<std::size_t>(dataset.labels[begin + r]);
            losses[begin + r] = row_cross_entropy(z, classes, dataset.labels[begin + r]);
        }
    }

    std::size_t hits = 0;
    double total_loss = 0.0;
    for (std::size_t i = 0; i < dataset.n; ++i) {
        hits += correct[i];
        total_loss += losses[i];
    }
    return {static_cast<double>(hits) / static_cast<double>(dataset.n),
            total_loss / static_cast<double>(dataset.n)};
}

}  // namespace fedagg

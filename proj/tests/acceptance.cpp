// Acceptance suite: runs every gate at its stated tolerance and prints one
// pass/fail line per criterion. Exits nonzero if any gate fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fedagg/aggregation.hpp"
#include "fedagg/changepoint.hpp"
#include "fedagg/harness.hpp"
#include "fedagg/training.hpp"
#include "reference.hpp"

using namespace fedagg;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d. %s — %s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    if (!ok)
        ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------- criteria 1-4

void criterion_1_krum_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(0xC0FFEE);
    std::normal_distribution<double> honest(0.0, 1.0);
    std::normal_distribution<double> wild(0.0, 40.0);
    std::bernoulli_distribution is_wild(0.3);

    int matched = 0;
    const int instances = 200;
    for (int trial = 0; trial < instances; ++trial) {
        const std::size_t n = 4 + gen() % 9;  // 4..12
        const std::size_t d = 1 + gen() % 5;
        const std::size_t f = gen() % ((n - 3) / 2 + 1);
        std::vector<UpdateVector> updates(n, UpdateVector(d));
        for (auto& u : updates) {
            auto& dist = is_wild(gen) ? wild : honest;
            for (double& v : u)
                v = dist(gen);
        }
        const UpdateSet set{updates};
        const auto ours = aggregate_krum(set, f);
        const auto oracle = fedref::krum_select(updates, f);
        if (ours.selected_index == oracle.selected &&
            ours.aggregate == updates[oracle.selected])
            ++matched;
    }
    const double elapsed = seconds_since(t0);
    report(1, "Krum oracle equivalence",
           matched == instances && elapsed < 5.0,
           fmt("%d/%d instances matched in %.2f s (budget 5 s)", matched, instances,
               elapsed));
}

void criterion_2_filter_fidelity() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;

    const auto traced = [&](const std::vector<double>& row,
                            const std::vector<double>& expected_kept,
                            std::size_t expected_removed) {
        const auto out = filter_extreme_values(row);
        ok = ok && out.kept == expected_kept && out.removed_count == expected_removed;
    };
    traced({1, 2, 3, 4, 100}, {1, 2, 3}, 2);
    traced({5, 5, 5, 5}, {5, 5, 5, 5}, 0);
    traced({0.01, 0.04, 2500, 3600}, {0.01, 0.04}, 2);

    std::mt19937_64 gen(0xF117E5);
    std::uniform_real_distribution<double> value(0.0, 50.0);
    std::uniform_real_distribution<double> tail(200.0, 20000.0);
    int randomized = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> row(2 + gen() % 63);
        for (double& v : row)
            v = value(gen);
        if (gen() % 2 && row.size() > 3)
            for (std::size_t i = row.size() - 1 - gen() % (row.size() / 2); i < row.size(); ++i)
                row[i] = tail(gen);
        std::sort(row.begin(), row.end());

        const auto ours = filter_extreme_values(row);
        const auto interpreter = fedref::filter_interpreter(row);
        if (ours.kept == interpreter)
            ++randomized;
        else
            ok = false;
    }
    report(2, "Median-filter trace fidelity", ok,
           fmt("3 worked rows + %d/100 randomized rows matched the interpreter in %.2f s",
               randomized, seconds_since(t0)));
}

void criterion_3_sse_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(0x5EE5);
    std::uniform_real_distribution<double> value(0.0, 100.0);
    std::uniform_real_distribution<double> tail(300.0, 3000.0);

    int matched = 0;
    const int instances = 500;
    for (int trial = 0; trial < instances; ++trial) {
        std::vector<double> row(2 + gen() % 63);  // m <= 64
        for (double& v : row)
            v = value(gen);
        if (gen() % 2 && row.size() > 4)
            for (std::size_t i = row.size() - 1 - gen() % (row.size() / 3); i < row.size(); ++i)
                row[i] = tail(gen);
        std::sort(row.begin(), row.end());

        const auto ours = sse_split(row);
        const auto oracle = fedref::sse_split_bruteforce(row);
        if (ours.split == oracle.split)
            ++matched;
    }
    report(3, "SSE-split oracle equivalence", matched == instances,
           fmt("%d/%d rows matched the exhaustive search in %.2f s", matched, instances,
               seconds_since(t0)));
}

void criterion_4_gradient_gate() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelLayout layout{{3, 4, 2}, 0.2};
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        ModelParams model = init_model(layout, rng);
        std::mt19937_64 gen(seed * 101);
        std::normal_distribution<double> feature(0.0, 1.0);
        const std::size_t batch = 8;
        std::vector<double> X(batch * 3);
        for (double& v : X)
            v = feature(gen);
        std::vector<int> y(batch);
        for (int& label : y)
            label = static_cast<int>(gen() % 2);

        const auto grads = backward(model, X, y);
        const double h = 1e-5;
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            auto probe = [&](std::vector<double>& params, const std::vector<double>& grad) {
                for (std::size_t k = 0; k < params.size(); ++k) {
                    const double saved = params[k];
                    params[k] = saved + h;
                    const double up = batch_cross_entropy(model, X, y);
                    params[k] = saved - h;
                    const double down = batch_cross_entropy(model, X, y);
                    params[k] = saved;
                    const double numeric = (up - down) / (2.0 * h);
                    worst = std::max(worst, std::abs(grad[k] - numeric) /
                                                std::max(1e-6, std::abs(grad[k]) +
                                                                   std::abs(numeric)));
                }
            };
            probe(model.layers[l].weights, grads[l].weights);
            probe(model.layers[l].biases, grads[l].biases);
        }
    }
    report(4, "Gradient gate (finite differences)", worst < 1e-4,
           fmt("max relative error %.3g over 5 batches (tolerance 1e-4) in %.2f s", worst,
               seconds_since(t0)));
}

// ------------------------------------------------------- scaled experiments

ExperimentConfig scaled_config(Aggregator aggregator, AttackKind attack, double alpha,
                               std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.dataset.source = DataSource::synthetic;
    cfg.dataset.classes = 2;
    cfg.dataset.dim = 20;
    cfg.dataset.per_class = 500;
    cfg.dataset.separation = 10.0;
    cfg.dataset.test_fraction = 0.2;
    cfg.n_clients = 25;
    cfg.byzantine_count = attack == AttackKind::none ? 0 : 11;
    cfg.aggregator = aggregator;
    if (aggregator == Aggregator::krum || aggregator == Aggregator::mkrum)
        cfg.known_f = 11;
    cfg.attack = AttackSpec::make(attack);
    if (attack == AttackKind::label_flipping)
        cfg.attack.label_map = {{0, 1}, {1, 0}};
    cfg.alpha = alpha;
    cfg.rounds = 40;
    cfg.train = {5, 32, 0.01};
    cfg.layout_layers = {20, 8, 2};
    cfg.master_seed = seed;
    return cfg;
}

// Completed runs, keyed for reuse across criteria.
std::map<std::string, RunRecord> run_cache;

const RunRecord& cached_run(Aggregator aggregator, AttackKind attack, double alpha,
                            std::uint64_t seed) {
    const std::string key = std::string(to_string(aggregator)) + "/" +
                            to_string(attack) + "/" + std::to_string(alpha) + "/" +
                            std::to_string(seed);
    auto it = run_cache.find(key);
    if (it == run_cache.end())
        it = run_cache.emplace(key, run_experiment(scaled_config(aggregator, attack,
                                                                 alpha, seed)))
                 .first;
    return it->second;
}

double last_rounds_stddev(const RunRecord& record, std::size_t window) {
    const std::size_t count = std::min(window, record.metrics.size());
    const std::size_t begin = record.metrics.size() - count;
    double mean = 0.0;
    for (std::size_t i = begin; i < record.metrics.size(); ++i)
        mean += record.metrics[i].test_accuracy;
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t i = begin; i < record.metrics.size(); ++i) {
        const double d = record.metrics[i].test_accuracy - mean;
        var += d * d;
    }
    return std::sqrt(var / static_cast<double>(count));
}

void criterion_5_large_outlier() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = 1;
    const double baseline =
        cached_run(Aggregator::mean, AttackKind::none, 10.0, seed).summary
            .final_mean_accuracy;

    bool ok = true;
    std::string detail = fmt("clean mean baseline %.3f;", baseline);
    for (const auto aggregator :
         {Aggregator::arkrum, Aggregator::mkrum, Aggregator::krum, Aggregator::rkrum}) {
        const double final_acc =
            cached_run(aggregator, AttackKind::large_outlier, 10.0, seed).summary
                .final_mean_accuracy;
        ok = ok && final_acc >= baseline - 0.05;
        detail += fmt(" %s %.3f", to_string(aggregator), final_acc);
    }
    const double mean_attacked =
        cached_run(Aggregator::mean, AttackKind::large_outlier, 10.0, seed).summary
            .final_mean_accuracy;
    ok = ok && mean_attacked <= baseline - 0.20;
    detail += fmt("; attacked mean %.3f", mean_attacked);

    const double elapsed = seconds_since(t0);
    ok = ok && elapsed < 120.0;
    detail += fmt(" (%.1f s, budget 120 s)", elapsed);
    report(5, "Scaled Large-Outlier experiment", ok, detail);
}

void criterion_6_noniid_stability() {
    const auto t0 = std::chrono::steady_clock::now();
    int arkrum_wins = 0;
    std::string detail;
    for (const std::uint64_t seed : {1, 2, 3}) {
        const double ark =
            last_rounds_stddev(cached_run(Aggregator::arkrum, AttackKind::large_outlier,
                                          0.5, seed),
                               20);
        const double rk =
            last_rounds_stddev(cached_run(Aggregator::rkrum, AttackKind::large_outlier,
                                          0.5, seed),
                               20);
        if (ark <= rk)
            ++arkrum_wins;
        detail += fmt("seed %llu: arkrum %.4f vs rkrum %.4f; ",
                      static_cast<unsigned long long>(seed), ark, rk);
    }
    detail += fmt("(%.1f s)", seconds_since(t0));
    report(6, "Non-IID stability (std, majority of 3 seeds)", arkrum_wins >= 2, detail);
}

void criterion_7_noise_injection() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = 1;
    const double baseline =
        cached_run(Aggregator::mean, AttackKind::none, 10.0, seed).summary
            .final_mean_accuracy;
    const double mean_noise =
        cached_run(Aggregator::mean, AttackKind::noise_injection, 10.0, seed).summary
            .final_mean_accuracy;
    const double mean_outlier =
        cached_run(Aggregator::mean, AttackKind::large_outlier, 10.0, seed).summary
            .final_mean_accuracy;

    bool ok = (baseline - mean_noise) < (baseline - mean_outlier);
    std::string detail = fmt("mean degradation: noise %.3f < outlier %.3f;",
                             baseline - mean_noise, baseline - mean_outlier);
    for (const auto aggregator :
         {Aggregator::arkrum, Aggregator::mkrum, Aggregator::krum, Aggregator::rkrum}) {
        const double final_acc =
            cached_run(aggregator, AttackKind::noise_injection, 10.0, seed).summary
                .final_mean_accuracy;
        ok = ok && final_acc >= baseline - 0.05;
        detail += fmt(" %s %.3f", to_string(aggregator), final_acc);
    }
    detail += fmt(" (%.1f s)", seconds_since(t0));
    report(7, "Noise-Injection sanity", ok, detail);
}

void criterion_8_label_flipping() {
    const auto t0 = std::chrono::steady_clock::now();
    bool completed = true;
    bool any_failure_flagged = false;
    std::string detail;
    for (const std::uint64_t seed : {1, 2, 3}) {
        const double baseline =
            cached_run(Aggregator::mean, AttackKind::none, 10.0, seed).summary
                .final_mean_accuracy;
        for (const auto aggregator : {Aggregator::arkrum, Aggregator::mkrum,
                                      Aggregator::krum, Aggregator::rkrum}) {
            const auto& record =
                cached_run(aggregator, AttackKind::label_flipping, 10.0, seed);
            completed = completed && record.metrics.size() == 40;
            if (record.summary.final_mean_accuracy < baseline - 0.10) {
                any_failure_flagged = true;
                detail += fmt("%s@seed%llu %.3f<%.3f-0.10; ", to_string(aggregator),
                              static_cast<unsigned long long>(seed),
                              record.summary.final_mean_accuracy, baseline);
            }
        }
    }
    if (!any_failure_flagged)
        detail += "no Krum-family method degraded by 10+ points; ";
    detail += fmt("(%.1f s)", seconds_since(t0));
    report(8, "Label-Flipping behavior", completed && any_failure_flagged, detail);
}

void criterion_9_determinism() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = scaled_config(Aggregator::arkrum, AttackKind::large_outlier, 10.0, 1);
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);

    // Wall-clock is measurement, not state: compare the CSV with the
    // wall_time_s column dropped and every other byte intact.
    const auto strip_wall = [](const std::string& csv) {
        std::string out;
        std::size_t start = 0;
        while (start < csv.size()) {
            std::size_t end = csv.find('\n', start);
            if (end == std::string::npos)
                end = csv.size();
            const std::string line = csv.substr(start, end - start);
            out += line.substr(0, line.rfind(','));
            out += '\n';
            start = end + 1;
        }
        return out;
    };
    const bool ok = strip_wall(metrics_csv(a)) == strip_wall(metrics_csv(b));
    report(9, "Determinism (byte-identical metrics)", ok,
           fmt("two runs of the same config compared over %zu rounds (%.1f s)",
               a.metrics.size(), seconds_since(t0)));
}

void criterion_10_constraint() {
    bool threw = false;
    std::string message;
    try {
        auto cfg = scaled_config(Aggregator::krum, AttackKind::large_outlier, 10.0, 1);
        cfg.known_f = 12;  // 2 + 24 >= 25
        run_experiment(cfg);
    } catch (const ConstraintViolation& e) {
        threw = true;
        message = e.what();
    }
    const bool names_values = message.find("12") != std::string::npos &&
                              message.find("25") != std::string::npos;
    bool mkrum_threw = false;
    try {
        auto cfg = scaled_config(Aggregator::mkrum, AttackKind::large_outlier, 10.0, 1);
        cfg.known_f = 13;
        run_experiment(cfg);
    } catch (const ConstraintViolation&) {
        mkrum_threw = true;
    }
    report(10, "Constraint enforcement (2+2f<n)", threw && names_values && mkrum_threw,
           threw ? "rejected with: " + message : "no rejection raised");
}

}  // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    criterion_1_krum_oracle();
    criterion_2_filter_fidelity();
    criterion_3_sse_oracle();
    criterion_4_gradient_gate();
    criterion_5_large_outlier();
    criterion_6_noniid_stability();
    criterion_7_noise_injection();
    criterion_8_label_flipping();
    criterion_9_determinism();
    criterion_10_constraint();
    if (failures)
        std::printf("\n%d criterion(s) FAILED\n", failures);
    else
        std::printf("\nall criteria passed\n");
    return failures;
}

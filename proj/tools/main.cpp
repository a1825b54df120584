// Command line front end: run experiments from a config file, compare metrics
// files, and run the brute-force verification suites.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedagg/aggregation.hpp"
#include "fedagg/changepoint.hpp"
#include "fedagg/harness.hpp"
#include "reference.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    const auto cfg = fedagg::parse_config(config_path);
    const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
    std::filesystem::create_directories(dir);

    std::printf("running %s aggregation, %zu clients (%zu byzantine, attack %s), %zu rounds\n",
                fedagg::to_string(cfg.aggregator), cfg.n_clients, cfg.byzantine_count,
                fedagg::to_string(cfg.attack.kind), cfg.rounds);
    const auto t0 = std::chrono::steady_clock::now();
    const auto record = fedagg::run_experiment(cfg);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto csv_path = (std::filesystem::path(dir) / "metrics.csv").string();
    const auto record_path = (std::filesystem::path(dir) / "run_record.json").string();
    fedagg::write_metrics(record, csv_path, record_path);

    std::printf("initial accuracy %.4f -> final-10 mean %.4f (max %.4f) in %.1f s\n",
                record.summary.initial_accuracy, record.summary.final_mean_accuracy,
                record.summary.max_accuracy, elapsed);
    std::printf("wrote %s and %s\n", csv_path.c_str(), record_path.c_str());
    return 0;
}

int cmd_compare(const std::vector<std::string>& csv_paths, const std::string& out_path) {
    std::string table = "file,rounds,final10_mean_accuracy,max_accuracy,last20_std\n";
    for (const auto& path : csv_paths) {
        const auto metrics = fedagg::read_metrics_csv(path);
        double final10 = 0.0, best = 0.0;
        const std::size_t tail = std::min<std::size_t>(10, metrics.size());
        for (std::size_t i = metrics.size() - tail; i < metrics.size(); ++i)
            final10 += metrics[i].test_accuracy;
        if (tail)
            final10 /= static_cast<double>(tail);
        for (const auto& m : metrics)
            best = std::max(best, m.test_accuracy);

        const std::size_t window = std::min<std::size_t>(20, metrics.size());
        double mean = 0.0, var = 0.0;
        for (std::size_t i = metrics.size() - window; i < metrics.size(); ++i)
            mean += metrics[i].test_accuracy;
        if (window)
            mean /= static_cast<double>(window);
        for (std::size_t i = metrics.size() - window; i < metrics.size(); ++i) {
            const double d = metrics[i].test_accuracy - mean;
            var += d * d;
        }
        const double stddev = window ? std::sqrt(var / static_cast<double>(window)) : 0.0;

        char line[512];
        std::snprintf(line, sizeof(line), "%s,%zu,%.6f,%.6f,%.6f\n", path.c_str(),
                      metrics.size(), final10, best, stddev);
        table += line;
    }
    if (out_path.empty()) {
        std::fputs(table.c_str(), stdout);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
            return 1;
        }
        out << table;
        std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
}

// Brute-force verification suites; mirrors the oracle gates of the
// acceptance tests so they can be run ad hoc.
int cmd_oracle(int instances) {
    int failed = 0;

    {
        std::mt19937_64 gen(0xC0FFEE);
        std::normal_distribution<double> honest(0.0, 1.0);
        std::normal_distribution<double> wild(0.0, 40.0);
        std::bernoulli_distribution is_wild(0.3);
        int matched = 0;
        for (int trial = 0; trial < instances; ++trial) {
            const std::size_t n = 4 + gen() % 9;
            const std::size_t d = 1 + gen() % 5;
            const std::size_t f = gen() % ((n - 3) / 2 + 1);
            std::vector<fedagg::UpdateVector> updates(n, fedagg::UpdateVector(d));
            for (auto& u : updates)
                for (double& v : u)
                    v = is_wild(gen) ? wild(gen) : honest(gen);
            const auto ours = fedagg::aggregate_krum(fedagg::UpdateSet{updates}, f);
            const auto oracle = fedref::krum_select(updates, f);
            if (ours.selected_index == oracle.selected)
                ++matched;
        }
        const bool ok = matched == instances;
        std::printf("[%s] krum vs brute force: %d/%d\n", ok ? "PASS" : "FAIL", matched,
                    instances);
        failed += !ok;
    }
    {
        std::mt19937_64 gen(0xF117E5);
        std::uniform_real_distribution<double> value(0.0, 50.0);
        int matched = 0;
        for (int trial = 0; trial < instances; ++trial) {
            std::vector<double> row(2 + gen() % 63);
            for (double& v : row)
                v = value(gen);
            if (gen() % 2)
                row.back() = 1e4;
            std::sort(row.begin(), row.end());
            if (fedagg::filter_extreme_values(row).kept == fedref::filter_interpreter(row))
                ++matched;
        }
        const bool ok = matched == instances;
        std::printf("[%s] median filter vs pseudocode interpreter: %d/%d\n",
                    ok ? "PASS" : "FAIL", matched, instances);
        failed += !ok;
    }
    {
        std::mt19937_64 gen(0x5EE5);
        std::uniform_real_distribution<double> value(0.0, 100.0);
        int matched = 0;
        for (int trial = 0; trial < instances; ++trial) {
            std::vector<double> row(2 + gen() % 63);
            for (double& v : row)
                v = value(gen);
            std::sort(row.begin(), row.end());
            if (fedagg::sse_split(row).split == fedref::sse_split_bruteforce(row).split)
                ++matched;
        }
        const bool ok = matched == instances;
        std::printf("[%s] sse split vs exhaustive search: %d/%d\n", ok ? "PASS" : "FAIL",
                    matched, instances);
        failed += !ok;
    }
    return failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Byzantine-robust aggregation simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path, "JSON experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (default: config output_dir)");

    std::vector<std::string> csv_paths;
    std::string table_path;
    auto* compare = app.add_subcommand("compare", "summarize metrics CSV files");
    compare->add_option("csv", csv_paths, "metrics.csv files")
        ->required()
        ->check(CLI::ExistingFile);
    compare->add_option("--out", table_path, "write the table here instead of stdout");

    int instances = 200;
    auto* oracle = app.add_subcommand("oracle", "run the brute-force verification suites");
    oracle->add_option("--instances", instances, "random instances per suite")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, out_dir);
        if (compare->parsed())
            return cmd_compare(csv_paths, table_path);
        return cmd_oracle(instances);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

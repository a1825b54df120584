#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedagg/attacks.hpp"
#include "fedagg/data.hpp"
#include "fedagg/training.hpp"
#include "fedagg/types.hpp"

namespace fedagg {

enum class DataSource { synthetic, idx, csv };
enum class Aggregator { mean, krum, mkrum, rkrum, arkrum };

const char* to_string(Aggregator a);
const char* to_string(DataSource s);
const char* to_string(AttackKind k);

struct DatasetConfig {
    DataSource source = DataSource::synthetic;
    // synthetic
    std::size_t classes = 2;
    std::size_t dim = 20;
    std::size_t per_class = 500;
    double separation = 10.0;
    // idx
    std::string train_images, train_labels, test_images, test_labels;
    // csv
    std::string csv_path;
    double test_fraction = 0.2;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::size_t n_clients = 100;
    std::size_t byzantine_count = 48;
    std::vector<std::size_t> byzantine_indices;  // empty: the last f clients
    Aggregator aggregator = Aggregator::mean;
    std::optional<std::size_t> known_f;          // krum/mkrum only
    AttackSpec attack;
    double alpha = 10.0;
    std::size_t rounds = 200;
    TrainConfig train;
    std::vector<std::size_t> layout_layers;      // empty: [d, 32, 16, 8, C]
    double leaky_slope = 0.2;
    std::uint64_t master_seed = 1;
    std::string output_dir = ".";
};

struct RoundMetrics {
    std::size_t round = 0;  // 1-based
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    std::optional<std::size_t> selected_index;
    std::size_t averaged_count = 0;
    std::optional<std::size_t> f_hat;  // winner's estimate, rkrum/arkrum
    double wall_time_s = 0.0;
};

struct RunSummary {
    double initial_accuracy = 0.0;
    double initial_loss = 0.0;
    double final_mean_accuracy = 0.0;  // mean of the last up-to-10 rounds
    double max_accuracy = 0.0;
};

struct RunRecord {
    ExperimentConfig config;  // fully resolved snapshot
    std::vector<RoundMetrics> metrics;
    RunSummary summary;
};

/// Reads and validates a JSON experiment config; unknown keys are rejected
/// and every default is filled in.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& json_text);

/// Runs the full federated loop: partition, per-round local training with
/// Byzantine behavior, aggregation, evaluation. Deterministic in
/// config.master_seed except for wall times.
RunRecord run_experiment(const ExperimentConfig& cfg);

/// Stable per-(purpose, round, client) seed derivation.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t purpose,
                          std::uint64_t round = 0, std::uint64_t client = 0);

// Derivation purposes.
inline constexpr std::uint64_t kSeedData = 1;
inline constexpr std::uint64_t kSeedPartition = 2;
inline constexpr std::uint64_t kSeedInit = 3;
inline constexpr std::uint64_t kSeedTrain = 4;
inline constexpr std::uint64_t kSeedAttack = 5;

/// The metrics table as CSV text (UTF-8, LF): header
/// round,accuracy,loss,selected_index,averaged_count,f_hat,wall_time_s.
std::string metrics_csv(const RunRecord& record);

/// Writes the CSV and a JSON run record (config snapshot + metrics + summary).
void write_metrics(const RunRecord& record, const std::string& csv_path,
                   const std::string& record_path);

std::vector<RoundMetrics> read_metrics_csv(const std::string& path);
RunRecord read_run_record(const std::string& path);

}  // namespace fedagg

#include "fedagg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fedagg/aggregation.hpp"

namespace fedagg {

using nlohmann::json;

const char* to_string(Aggregator a) {
    switch (a) {
        case Aggregator::mean: return "mean";
        case Aggregator::krum: return "krum";
        case Aggregator::mkrum: return "mkrum";
        case Aggregator::rkrum: return "rkrum";
        case Aggregator::arkrum: return "arkrum";
    }
    return "?";
}

const char* to_string(DataSource s) {
    switch (s) {
        case DataSource::synthetic: return "synthetic";
        case DataSource::idx: return "idx";
        case DataSource::csv: return "csv";
    }
    return "?";
}

const char* to_string(AttackKind k) {
    switch (k) {
        case AttackKind::none: return "none";
        case AttackKind::large_outlier: return "large_outlier";
        case AttackKind::noise_injection: return "noise_injection";
        case AttackKind::label_flipping: return "label_flipping";
    }
    return "?";
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t purpose,
                          std::uint64_t round, std::uint64_t client) {
    return derive_seed(master, purpose, round, client);
}

namespace {

Aggregator aggregator_from(const std::string& s) {
    if (s == "mean") return Aggregator::mean;
    if (s == "krum") return Aggregator::krum;
    if (s == "mkrum") return Aggregator::mkrum;
    if (s == "rkrum") return Aggregator::rkrum;
    if (s == "arkrum") return Aggregator::arkrum;
    throw std::invalid_argument("unknown aggregator '" + s +
                                "' (expected mean|krum|mkrum|rkrum|arkrum)");
}

DataSource source_from(const std::string& s) {
    if (s == "synthetic") return DataSource::synthetic;
    if (s == "idx") return DataSource::idx;
    if (s == "csv") return DataSource::csv;
    throw std::invalid_argument("unknown dataset source '" + s +
                                "' (expected synthetic|idx|csv)");
}

AttackKind attack_from(const std::string& s) {
    if (s == "none") return AttackKind::none;
    if (s == "large_outlier") return AttackKind::large_outlier;
    if (s == "noise_injection") return AttackKind::noise_injection;
    if (s == "label_flipping") return AttackKind::label_flipping;
    throw std::invalid_argument("unknown attack kind '" + s + "'");
}

void expect_keys(const json& j, const char* context,
                 std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw std::invalid_argument("unknown key '" + it.key() + "' in " + context);
    }
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n_clients < 1)
        throw std::invalid_argument("n_clients must be at least 1");
    if (cfg.byzantine_count >= cfg.n_clients)
        throw std::invalid_argument("byzantine_count " +
                                    std::to_string(cfg.byzantine_count) +
                                    " must be below n_clients " +
                                    std::to_string(cfg.n_clients));
    if (!cfg.byzantine_indices.empty()) {
        if (cfg.byzantine_indices.size() != cfg.byzantine_count)
            throw std::invalid_argument("byzantine_indices lists " +
                                        std::to_string(cfg.byzantine_indices.size()) +
                                        " clients but byzantine_count is " +
                                        std::to_string(cfg.byzantine_count));
        for (std::size_t i : cfg.byzantine_indices)
            if (i >= cfg.n_clients)
                throw std::invalid_argument("byzantine index " + std::to_string(i) +
                                            " out of range");
    }
    if (cfg.aggregator == Aggregator::krum || cfg.aggregator == Aggregator::mkrum) {
        if (!cfg.known_f)
            throw std::invalid_argument(std::string(to_string(cfg.aggregator)) +
                                        " requires known_f");
        if (2 + 2 * *cfg.known_f >= cfg.n_clients)
            throw ConstraintViolation(std::string(to_string(cfg.aggregator)) +
                                      " requires 2 + 2f < n, violated by known_f=" +
                                      std::to_string(*cfg.known_f) + ", n_clients=" +
                                      std::to_string(cfg.n_clients));
    }
    if ((cfg.aggregator == Aggregator::rkrum || cfg.aggregator == Aggregator::arkrum) &&
        cfg.n_clients < 4)
        throw std::invalid_argument(std::string(to_string(cfg.aggregator)) +
                                    " needs n_clients >= 4");
    if (cfg.attack.kind == AttackKind::label_flipping && cfg.attack.label_map.empty())
        throw std::invalid_argument("label_flipping attack requires a label_map");
    if (!(cfg.alpha > 0.0))
        throw std::invalid_argument("partition.alpha must be positive");
    if (!(cfg.dataset.test_fraction >= 0.0 && cfg.dataset.test_fraction < 1.0))
        throw std::invalid_argument("dataset.test_fraction must be in [0, 1)");
    if (!cfg.layout_layers.empty() && cfg.layout_layers.size() < 2)
        throw std::invalid_argument("layout.layers needs at least 2 entries");
    if (cfg.train.local_epochs < 1)
        throw std::invalid_argument("train.local_epochs must be at least 1");
    if (cfg.train.batch_size < 1)
        throw std::invalid_argument("train.batch_size must be at least 1");
    if (!(cfg.train.learning_rate >= 0.0))
        throw std::invalid_argument("train.learning_rate must be nonnegative");
}

ExperimentConfig config_from_json(const json& root) {
    expect_keys(root, "config",
                {"dataset", "n_clients", "byzantine_count", "byzantine_indices",
                 "aggregator", "known_f", "attack", "partition", "rounds", "train",
                 "layout", "master_seed", "output_dir"});
    if (!root.contains("aggregator"))
        throw std::invalid_argument("missing required key 'aggregator'");

    ExperimentConfig cfg;
    cfg.aggregator = aggregator_from(root.at("aggregator").get<std::string>());

    if (root.contains("dataset")) {
        const json& d = root.at("dataset");
        expect_keys(d, "dataset",
                    {"source", "classes", "dim", "per_class", "separation",
                     "train_images", "train_labels", "test_images", "test_labels",
                     "csv", "test_fraction"});
        if (d.contains("source"))
            cfg.dataset.source = source_from(d.at("source").get<std::string>());
        cfg.dataset.classes = d.value("classes", cfg.dataset.classes);
        cfg.dataset.dim = d.value("dim", cfg.dataset.dim);
        cfg.dataset.per_class = d.value("per_class", cfg.dataset.per_class);
        cfg.dataset.separation = d.value("separation", cfg.dataset.separation);
        cfg.dataset.train_images = d.value("train_images", std::string{});
        cfg.dataset.train_labels = d.value("train_labels", std::string{});
        cfg.dataset.test_images = d.value("test_images", std::string{});
        cfg.dataset.test_labels = d.value("test_labels", std::string{});
        cfg.dataset.csv_path = d.value("csv", std::string{});
        cfg.dataset.test_fraction = d.value("test_fraction", cfg.dataset.test_fraction);
        if (cfg.dataset.source == DataSource::idx) {
            for (const auto* key :
                 {"train_images", "train_labels", "test_images", "test_labels"})
                if (!d.contains(key))
                    throw std::invalid_argument(std::string("idx dataset requires '") +
                                                key + "'");
        }
        if (cfg.dataset.source == DataSource::csv && cfg.dataset.csv_path.empty())
            throw std::invalid_argument("csv dataset requires 'csv' path");
    }

    cfg.n_clients = root.value("n_clients", cfg.n_clients);
    cfg.byzantine_count = root.value("byzantine_count", cfg.byzantine_count);
    if (root.contains("byzantine_indices")) {
        cfg.byzantine_indices =
            root.at("byzantine_indices").get<std::vector<std::size_t>>();
        if (!root.contains("byzantine_count"))
            cfg.byzantine_count = cfg.byzantine_indices.size();
    }
    if (root.contains("known_f"))
        cfg.known_f = root.at("known_f").get<std::size_t>();

    if (root.contains("attack")) {
        const json& a = root.at("attack");
        expect_keys(a, "attack", {"kind", "sigma", "mu", "label_map"});
        const AttackKind kind =
            a.contains("kind") ? attack_from(a.at("kind").get<std::string>())
                               : AttackKind::none;
        cfg.attack = AttackSpec::make(kind);
        cfg.attack.sigma = a.value("sigma", cfg.attack.sigma);
        cfg.attack.mu = a.value("mu", cfg.attack.mu);
        if (a.contains("label_map")) {
            for (auto it = a.at("label_map").begin(); it != a.at("label_map").end(); ++it)
                cfg.attack.label_map[std::stoi(it.key())] = it.value().get<int>();
        }
    }

    if (root.contains("partition")) {
        const json& p = root.at("partition");
        expect_keys(p, "partition", {"alpha"});
        cfg.alpha = p.value("alpha", cfg.alpha);
    }
    cfg.rounds = root.value("rounds", cfg.rounds);
    if (root.contains("train")) {
        const json& t = root.at("train");
        expect_keys(t, "train", {"local_epochs", "batch_size", "learning_rate"});
        cfg.train.local_epochs = t.value("local_epochs", cfg.train.local_epochs);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    }
    if (root.contains("layout")) {
        const json& l = root.at("layout");
        expect_keys(l, "layout", {"layers", "leaky_slope"});
        if (l.contains("layers"))
            cfg.layout_layers = l.at("layers").get<std::vector<std::size_t>>();
        cfg.leaky_slope = l.value("leaky_slope", cfg.leaky_slope);
    }
    cfg.master_seed = root.value("master_seed", cfg.master_seed);
    cfg.output_dir = root.value("output_dir", cfg.output_dir);

    validate_config(cfg);
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json d{{"source", to_string(cfg.dataset.source)},
           {"test_fraction", cfg.dataset.test_fraction}};
    switch (cfg.dataset.source) {
        case DataSource::synthetic:
            d["classes"] = cfg.dataset.classes;
            d["dim"] = cfg.dataset.dim;
            d["per_class"] = cfg.dataset.per_class;
            d["separation"] = cfg.dataset.separation;
            break;
        case DataSource::idx:
            d["train_images"] = cfg.dataset.train_images;
            d["train_labels"] = cfg.dataset.train_labels;
            d["test_images"] = cfg.dataset.test_images;
            d["test_labels"] = cfg.dataset.test_labels;
            break;
        case DataSource::csv:
            d["csv"] = cfg.dataset.csv_path;
            break;
    }

    json a{{"kind", to_string(cfg.attack.kind)},
           {"sigma", cfg.attack.sigma},
           {"mu", cfg.attack.mu}};
    if (!cfg.attack.label_map.empty()) {
        json map = json::object();
        for (const auto& [from, to] : cfg.attack.label_map)
            map[std::to_string(from)] = to;
        a["label_map"] = map;
    }

    json root{{"dataset", d},
              {"n_clients", cfg.n_clients},
              {"byzantine_count", cfg.byzantine_count},
              {"aggregator", to_string(cfg.aggregator)},
              {"attack", a},
              {"partition", {{"alpha", cfg.alpha}}},
              {"rounds", cfg.rounds},
              {"train",
               {{"local_epochs", cfg.train.local_epochs},
                {"batch_size", cfg.train.batch_size},
                {"learning_rate", cfg.train.learning_rate}}},
              {"layout",
               {{"layers", cfg.layout_layers}, {"leaky_slope", cfg.leaky_slope}}},
              {"master_seed", cfg.master_seed},
              {"output_dir", cfg.output_dir}};
    if (!cfg.byzantine_indices.empty())
        root["byzantine_indices"] = cfg.byzantine_indices;
    if (cfg.known_f)
        root["known_f"] = *cfg.known_f;
    return root;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

AggregationResult run_aggregator(const ExperimentConfig& cfg, const UpdateSet& set) {
    switch (cfg.aggregator) {
        case Aggregator::mean: return aggregate_mean(set);
        case Aggregator::krum: return aggregate_krum(set, *cfg.known_f);
        case Aggregator::mkrum: return aggregate_mkrum(set, *cfg.known_f);
        case Aggregator::rkrum: return aggregate_rkrum(set);
        case Aggregator::arkrum: return aggregate_arkrum(set);
    }
    throw std::logic_error("unhandled aggregator");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(root);
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    RunRecord record;
    record.config = cfg;

    Dataset train_set, test_set;
    switch (cfg.dataset.source) {
        case DataSource::synthetic: {
            Rng data_rng(stream_seed(cfg.master_seed, kSeedData));
            const Dataset all =
                generate_synthetic(cfg.dataset.classes, cfg.dataset.dim,
                                   cfg.dataset.per_class, cfg.dataset.separation,
                                   data_rng);
            std::tie(train_set, test_set) =
                train_test_split(all, cfg.dataset.test_fraction, data_rng);
            break;
        }
        case DataSource::idx:
            train_set = load_idx(cfg.dataset.train_images, cfg.dataset.train_labels);
            test_set = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels);
            break;
        case DataSource::csv: {
            Rng data_rng(stream_seed(cfg.master_seed, kSeedData));
            const Dataset all = load_feature_csv(cfg.dataset.csv_path);
            std::tie(train_set, test_set) =
                train_test_split(all, cfg.dataset.test_fraction, data_rng);
            break;
        }
    }
    if (test_set.n == 0)
        throw std::invalid_argument("test set is empty; raise dataset.test_fraction");

    std::vector<std::size_t> layers = cfg.layout_layers;
    if (layers.empty())
        layers = {train_set.dim, 32, 16, 8, train_set.classes};
    if (layers.front() != train_set.dim)
        throw std::invalid_argument("layout input width " + std::to_string(layers.front()) +
                                    " does not match feature dimension " +
                                    std::to_string(train_set.dim));
    if (layers.back() != train_set.classes)
        throw std::invalid_argument("layout output width " + std::to_string(layers.back()) +
                                    " does not match class count " +
                                    std::to_string(train_set.classes));
    record.config.layout_layers = layers;
    const ModelLayout layout{layers, cfg.leaky_slope};

    const auto shards = dirichlet_partition(
        train_set, {cfg.n_clients, cfg.alpha, stream_seed(cfg.master_seed, kSeedPartition)});

    std::vector<unsigned char> is_byzantine(cfg.n_clients, 0);
    if (!cfg.byzantine_indices.empty()) {
        for (std::size_t i : cfg.byzantine_indices)
            is_byzantine[i] = 1;
    } else {
        for (std::size_t i = cfg.n_clients - cfg.byzantine_count; i < cfg.n_clients; ++i)
            is_byzantine[i] = 1;
    }

    Dataset flipped_set;
    if (cfg.attack.kind == AttackKind::label_flipping && cfg.byzantine_count > 0)
        flipped_set = flip_labels(train_set, cfg.attack.label_map);

    Rng init_rng(stream_seed(cfg.master_seed, kSeedInit));
    ModelParams global = init_model(layout, init_rng);
    {
        const EvalResult initial = evaluate(global, test_set);
        record.summary.initial_accuracy = initial.accuracy;
        record.summary.initial_loss = initial.loss;
    }

    for (std::size_t round = 1; round <= cfg.rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<UpdateVector> updates(cfg.n_clients);
        std::vector<std::exception_ptr> errors(cfg.n_clients);
#pragma omp parallel for schedule(dynamic)
        for (std::size_t i = 0; i < cfg.n_clients; ++i) {
            try {
                if (is_byzantine[i] && cfg.attack.kind == AttackKind::large_outlier) {
                    Rng attack_rng(stream_seed(cfg.master_seed, kSeedAttack, round, i));
                    updates[i] =
                        forge_outlier_update(layout.param_count(), cfg.attack, attack_rng);
                } else {
                    Rng train_rng(stream_seed(cfg.master_seed, kSeedTrain, round, i));
                    const Dataset& source =
                        (is_byzantine[i] && cfg.attack.kind == AttackKind::label_flipping)
                            ? flipped_set
                            : train_set;
                    updates[i] = local_train(global, source, shards[i], cfg.train, train_rng);
                    if (is_byzantine[i] && cfg.attack.kind == AttackKind::noise_injection) {
                        Rng attack_rng(stream_seed(cfg.master_seed, kSeedAttack, round, i));
                        updates[i] = inject_noise(updates[i], cfg.attack, attack_rng);
                    }
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        for (std::size_t i = 0; i < cfg.n_clients; ++i)
            if (errors[i])
                std::rethrow_exception(errors[i]);

        AggregationResult agg;
        try {
            agg = run_aggregator(cfg, UpdateSet{std::move(updates)});
        } catch (const std::exception& e) {
            throw std::runtime_error("round " + std::to_string(round) +
                                     " rejected: " + e.what());
        }
        global = unflatten(agg.aggregate, layout);
        const EvalResult eval = evaluate(global, test_set);

        RoundMetrics m;
        m.round = round;
        m.test_accuracy = eval.accuracy;
        m.test_loss = eval.loss;
        m.selected_index = agg.selected_index;
        m.averaged_count = agg.averaged_indices.size();
        if (!agg.estimates.empty() && agg.selected_index)
            m.f_hat = agg.estimates[*agg.selected_index].f_hat;
        m.wall_time_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        record.metrics.push_back(m);
    }

    if (record.metrics.empty()) {
        record.summary.final_mean_accuracy = record.summary.initial_accuracy;
        record.summary.max_accuracy = record.summary.initial_accuracy;
    } else {
        const std::size_t tail = std::min<std::size_t>(10, record.metrics.size());
        double sum = 0.0;
        for (std::size_t i = record.metrics.size() - tail; i < record.metrics.size(); ++i)
            sum += record.metrics[i].test_accuracy;
        record.summary.final_mean_accuracy = sum / static_cast<double>(tail);
        double best = record.metrics.front().test_accuracy;
        for (const auto& m : record.metrics)
            best = std::max(best, m.test_accuracy);
        record.summary.max_accuracy = best;
    }
    return record;
}

std::string metrics_csv(const RunRecord& record) {
    std::string out = "round,accuracy,loss,selected_index,averaged_count,f_hat,wall_time_s\n";
    char wall[32];
    for (const auto& m : record.metrics) {
        out += std::to_string(m.round);
        out += ',';
        out += format_double(m.test_accuracy);
        out += ',';
        out += format_double(m.test_loss);
        out += ',';
        if (m.selected_index)
            out += std::to_string(*m.selected_index);
        out += ',';
        out += std::to_string(m.averaged_count);
        out += ',';
        if (m.f_hat)
            out += std::to_string(*m.f_hat);
        out += ',';
        std::snprintf(wall, sizeof(wall), "%.6f", m.wall_time_s);
        out += wall;
        out += '\n';
    }
    return out;
}

void write_metrics(const RunRecord& record, const std::string& csv_path,
                   const std::string& record_path) {
    {
        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv)
            throw std::runtime_error("cannot write " + csv_path);
        csv << metrics_csv(record);
        if (!csv)
            throw std::runtime_error("write failed for " + csv_path);
    }
    json root;
    root["config"] = config_to_json(record.config);
    json rounds = json::array();
    for (const auto& m : record.metrics) {
        json jm{{"round", m.round},
                {"accuracy", m.test_accuracy},
                {"loss", m.test_loss},
                {"averaged_count", m.averaged_count},
                {"wall_time_s", m.wall_time_s}};
        jm["selected_index"] = m.selected_index ? json(*m.selected_index) : json(nullptr);
        jm["f_hat"] = m.f_hat ? json(*m.f_hat) : json(nullptr);
        rounds.push_back(jm);
    }
    root["metrics"] = rounds;
    root["summary"] = {{"initial_accuracy", record.summary.initial_accuracy},
                       {"initial_loss", record.summary.initial_loss},
                       {"final_mean_accuracy", record.summary.final_mean_accuracy},
                       {"max_accuracy", record.summary.max_accuracy}};
    std::ofstream rec(record_path, std::ios::binary);
    if (!rec)
        throw std::runtime_error("cannot write " + record_path);
    rec << root.dump(2) << '\n';
    if (!rec)
        throw std::runtime_error("write failed for " + record_path);
}

std::vector<RoundMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path + " is empty");

    std::vector<RoundMetrics> metrics;
    std::size_t expected_round = 1;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            cells.push_back(line.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos));
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
        if (cells.size() != 7)
            throw std::runtime_error(path + ": malformed metrics row '" + line + "'");
        RoundMetrics m;
        m.round = std::stoull(cells[0]);
        if (m.round != expected_round++)
            throw std::runtime_error(path + ": rounds are not contiguous from 1");
        m.test_accuracy = std::stod(cells[1]);
        m.test_loss = std::stod(cells[2]);
        if (!cells[3].empty())
            m.selected_index = std::stoull(cells[3]);
        m.averaged_count = std::stoull(cells[4]);
        if (!cells[5].empty())
            m.f_hat = std::stoull(cells[5]);
        m.wall_time_s = std::stod(cells[6]);
        metrics.push_back(m);
    }
    return metrics;
}

RunRecord read_run_record(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + " is not a valid run record: " + e.what());
    }
    RunRecord record;
    record.config = config_from_json(root.at("config"));
    for (const auto& jm : root.at("metrics")) {
        RoundMetrics m;
        m.round = jm.at("round").get<std::size_t>();
        m.test_accuracy = jm.at("accuracy").get<double>();
        m.test_loss = jm.at("loss").get<double>();
        if (!jm.at("selected_index").is_null())
            m.selected_index = jm.at("selected_index").get<std::size_t>();
        m.averaged_count = jm.at("averaged_count").get<std::size_t>();
        if (!jm.at("f_hat").is_null())
            m.f_hat = jm.at("f_hat").get<std::size_t>();
        m.wall_time_s = jm.at("wall_time_s").get<double>();
        record.metrics.push_back(m);
    }
    const json& s = root.at("summary");
    record.summary.initial_accuracy = s.at("initial_accuracy").get<double>();
    record.summary.initial_loss = s.at("initial_loss").get<double>();
    record.summary.final_mean_accuracy = s.at("final_mean_accuracy").get<double>();
    record.summary.max_accuracy = s.at("max_accuracy").get<double>();
    return record;
}

}  // namespace fedagg

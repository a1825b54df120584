#include "fedagg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fedagg {

namespace {

Dataset select_rows(const Dataset& src, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.n = rows.size();
    out.dim = src.dim;
    out.classes = src.classes;
    out.features.reserve(out.n * out.dim);
    out.labels.reserve(out.n);
    for (std::size_t r : rows) {
        const auto row = src.row(r);
        out.features.insert(out.features.end(), row.begin(), row.end());
        out.labels.push_back(src.labels[r]);
    }
    return out;
}

// Integer quotas for `count` items under proportions p, largest remainder.
std::vector<std::size_t> largest_remainder(const std::vector<double>& p,
                                           std::size_t count) {
    const std::size_t n = p.size();
    std::vector<std::size_t> base(n);
    std::vector<std::pair<double, std::size_t>> frac(n);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double quota = p[i] * static_cast<double>(count);
        base[i] = static_cast<std::size_t>(quota);
        assigned += base[i];
        frac[i] = {quota - static_cast<double>(base[i]), i};
    }
    std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;  // stable: ties fall to the lower index
    });
    for (std::size_t k = 0; assigned < count; ++k, ++assigned)
        ++base[frac[k % n].second];
    return base;
}

}  // namespace

std::vector<ClientShard> dirichlet_partition(const Dataset& dataset,
                                             const PartitionSpec& spec) {
    if (spec.n_clients < 1)
        throw std::invalid_argument("n_clients must be at least 1");
    if (spec.n_clients > dataset.n)
        throw std::invalid_argument("cannot partition " + std::to_string(dataset.n) +
                                    " samples across " + std::to_string(spec.n_clients) +
                                    " clients");
    if (!(spec.alpha > 0.0))
        throw std::invalid_argument("Dirichlet alpha must be positive");

    Rng rng(spec.seed);
    std::vector<ClientShard> shards(spec.n_clients);

    for (std::size_t c = 0; c < dataset.classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < dataset.n; ++i)
            if (dataset.labels[i] == static_cast<int>(c))
                members.push_back(i);
        if (members.empty())
            continue;
        rng.shuffle(members);

        std::vector<double> draws(spec.n_clients);
        double total = 0.0;
        for (double& g : draws) {
            g = rng.gamma(spec.alpha);
            total += g;
        }
        std::vector<double> p(spec.n_clients);
        for (std::size_t i = 0; i < spec.n_clients; ++i)
            p[i] = total > 0.0 ? draws[i] / total : 1.0 / static_cast<double>(spec.n_clients);

        const auto quotas = largest_remainder(p, members.size());
        std::size_t offset = 0;
        for (std::size_t i = 0; i < spec.n_clients; ++i) {
            shards[i].insert(shards[i].end(), members.begin() + offset,
                             members.begin() + offset + quotas[i]);
            offset += quotas[i];
        }
    }

    // Every client must stay trainable.
    for (std::size_t i = 0; i < shards.size(); ++i) {
        while (shards[i].empty()) {
            std::size_t largest = 0;
            for (std::size_t j = 1; j < shards.size(); ++j)
                if (shards[j].size() > shards[largest].size())
                    largest = j;
            if (shards[largest].size() <= 1)
                throw std::runtime_error("not enough samples to give every client one");
            shards[i].push_back(shards[largest].back());
            shards[largest].pop_back();
        }
    }
    for (auto& shard : shards)
        std::sort(shard.begin(), shard.end());
    return shards;
}

Dataset generate_synthetic(std::size_t classes, std::size_t dim,
                           std::size_t per_class, double separation, Rng& rng) {
    if (classes < 1 || dim < 1 || per_class < 1)
        throw std::invalid_argument("classes, dim and per_class must be at least 1");
    if (dim < classes)
        throw std::invalid_argument("axis-aligned class means need dim >= classes");

    // Means at s/sqrt(2) along distinct axes are pairwise exactly s apart.
    const double scale = separation / std::sqrt(2.0);
    Dataset out;
    out.n = classes * per_class;
    out.dim = dim;
    out.classes = classes;
    out.features.resize(out.n * dim);
    out.labels.resize(out.n);
    std::size_t r = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s, ++r) {
            double* row = out.features.data() + r * dim;
            for (std::size_t k = 0; k < dim; ++k)
                row[k] = rng.normal(k == c ? scale : 0.0, 1.0);
            out.labels[r] = static_cast<int>(c);
        }
    }
    return out;
}

namespace {

std::uint32_t read_be32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw std::runtime_error("unexpected end of file while reading header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img)
        throw std::runtime_error("cannot open " + images_path);
    const std::uint32_t img_magic = read_be32(img);
    if (img_magic != 0x00000803) {
        std::ostringstream msg;
        msg << "bad image magic in " << images_path << ": got 0x" << std::hex
            << img_magic << ", expected 0x803";
        throw std::runtime_error(msg.str());
    }
    const std::uint32_t count = read_be32(img);
    const std::uint32_t rows = read_be32(img);
    const std::uint32_t cols = read_be32(img);
    const std::size_t pixels = std::size_t(rows) * cols;

    std::vector<unsigned char> raw(std::size_t(count) * pixels);
    img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(img.gcount()) != raw.size())
        throw std::runtime_error(images_path + " truncated: expected " +
                                 std::to_string(raw.size()) + " pixel bytes, got " +
                                 std::to_string(img.gcount()));

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab)
        throw std::runtime_error("cannot open " + labels_path);
    const std::uint32_t lab_magic = read_be32(lab);
    if (lab_magic != 0x00000801)
        throw std::runtime_error("bad label magic in " + labels_path);
    const std::uint32_t lab_count = read_be32(lab);
    if (lab_count != count)
        throw std::runtime_error("count mismatch: " + std::to_string(count) +
                                 " images vs " + std::to_string(lab_count) + " labels");
    std::vector<unsigned char> raw_labels(count);
    lab.read(reinterpret_cast<char*>(raw_labels.data()), count);
    if (static_cast<std::size_t>(lab.gcount()) != raw_labels.size())
        throw std::runtime_error(labels_path + " truncated: expected " +
                                 std::to_string(count) + " label bytes, got " +
                                 std::to_string(lab.gcount()));

    Dataset out;
    out.n = count;
    out.dim = pixels;
    out.classes = 10;
    out.features.resize(out.n * out.dim);
    out.labels.resize(out.n);
    for (std::size_t i = 0; i < raw.size(); ++i)
        out.features[i] = static_cast<double>(raw[i]) / 255.0;
    for (std::size_t i = 0; i < out.n; ++i) {
        out.labels[i] = raw_labels[i];
        if (out.labels[i] > 9)
            throw std::runtime_error("label " + std::to_string(out.labels[i]) +
                                     " out of range at row " + std::to_string(i));
    }
    return out;
}

Dataset load_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);

    Dataset out;
    std::string line;
    std::size_t line_no = 0;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;

        std::vector<double> cells;
        std::size_t pos = 0;
        bool numeric = true;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell =
                line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size())
                    numeric = false;
                cells.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
            }
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
        if (!numeric) {
            if (line_no == 1 && out.n == 0)
                continue;  // header
            throw std::runtime_error(path + ": non-numeric cell at row " +
                                     std::to_string(line_no));
        }
        if (cells.size() < 2)
            throw std::runtime_error(path + ": row " + std::to_string(line_no) +
                                     " needs at least one feature and a label");
        const std::size_t d = cells.size() - 1;
        if (out.n == 0) {
            out.dim = d;
        } else if (d != out.dim) {
            throw std::runtime_error(path + ": ragged row " + std::to_string(line_no) +
                                     " has " + std::to_string(d) + " features, expected " +
                                     std::to_string(out.dim));
        }
        const double label_cell = cells.back();
        const int label = static_cast<int>(label_cell);
        if (label < 0 || static_cast<double>(label) != label_cell)
            throw std::runtime_error(path + ": row " + std::to_string(line_no) +
                                     " has non-integer or negative label");
        out.features.insert(out.features.end(), cells.begin(), cells.end() - 1);
        out.labels.push_back(label);
        max_label = std::max(max_label, label);
        ++out.n;
    }
    if (out.n == 0)
        throw std::runtime_error(path + ": no data rows");
    out.classes = static_cast<std::size_t>(max_label) + 1;
    return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& dataset,
                                             double test_fraction, Rng& rng) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("test_fraction must be in [0, 1)");
    std::vector<std::size_t> order(dataset.n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const std::size_t test_n =
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(dataset.n)));
    const std::vector<std::size_t> test_rows(order.begin(), order.begin() + test_n);
    const std::vector<std::size_t> train_rows(order.begin() + test_n, order.end());
    return {select_rows(dataset, train_rows), select_rows(dataset, test_rows)};
}

}  // namespace fedagg

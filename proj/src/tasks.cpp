#include "lznet/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace lznet::tasks {

AdditionBatch gen_addition(std::size_t steps, std::size_t batch, std::uint64_t seed) {
    if (steps < 2) throw Error("gen_addition: need at least two steps");
    if (batch < 1) throw Error("gen_addition: empty batch");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    AdditionBatch out{batch, steps, {}, {}, {}};
    out.values.resize(batch * steps);
    out.indicators.assign(batch * steps, 0.0);
    out.targets.resize(batch);
    const std::size_t half = steps / 2;
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < steps; ++t) out.values[b * steps + t] = unit(rng);
        const std::size_t first = rng() % half;
        const std::size_t second = half + rng() % (steps - half);
        out.indicators[b * steps + first] = 1.0;
        out.indicators[b * steps + second] = 1.0;
        out.targets[b] = out.values[b * steps + first] + out.values[b * steps + second];
    }
    return out;
}

double addition_baseline_mse() { return 1.0 / 6.0; }

CopyBatch gen_copy(std::size_t n_items, std::size_t n_symbols, std::size_t delay,
                   std::size_t batch, std::uint64_t seed) {
    if (n_items < 1 || n_symbols < 2 || delay < 1 || batch < 1) {
        throw Error("gen_copy: invalid sizes");
    }
    std::mt19937_64 rng(seed);
    const std::size_t length = delay + 2 * n_items;
    const int delimiter = static_cast<int>(n_symbols) + 1;
    CopyBatch out{batch, length, n_items, n_symbols, delay, {}, {}};
    out.inputs.assign(batch * length, 0);
    out.targets.assign(batch * length, 0);
    for (std::size_t b = 0; b < batch; ++b) {
        int* in = out.inputs.data() + b * length;
        int* tg = out.targets.data() + b * length;
        for (std::size_t i = 0; i < n_items; ++i) {
            const int sym = 1 + static_cast<int>(rng() % n_symbols);
            in[i] = sym;
            tg[n_items + delay + i] = sym;
        }
        in[n_items + delay - 1] = delimiter;
    }
    return out;
}

double copy_baseline_ce(std::size_t n_items, std::size_t n_symbols, std::size_t delay) {
    if (n_items < 1 || n_symbols < 1 || delay < 1) {
        throw Error("copy_baseline_ce: invalid sizes");
    }
    return static_cast<double>(n_items) * std::log(static_cast<double>(n_symbols)) /
           static_cast<double>(delay + 2 * n_items);
}

UcrDataset load_ucr_tsv(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw Error("load_ucr_tsv: cannot open " + path);
    UcrDataset ds;
    std::vector<int> raw_labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty()) continue;
        for (auto& ch : line) {
            if (ch == ',' || ch == '\t') ch = ' ';
        }
        std::istringstream fields(line);
        std::vector<double> row;
        double v;
        while (fields >> v) row.push_back(v);
        if (!fields.eof()) {
            throw Error("load_ucr_tsv: non-numeric field at line " +
                        std::to_string(line_no));
        }
        if (row.size() < 2) {
            throw Error("load_ucr_tsv: fewer than 2 columns at line " +
                        std::to_string(line_no));
        }
        const double label = row.front();
        if (label != std::floor(label)) {
            throw Error("load_ucr_tsv: non-integer label at line " +
                        std::to_string(line_no));
        }
        std::vector<double> series(row.begin() + 1, row.end());
        if (!ds.series.empty() && series.size() != ds.length) {
            throw Error("load_ucr_tsv: ragged row at line " + std::to_string(line_no));
        }
        ds.length = series.size();
        raw_labels.push_back(static_cast<int>(label));
        ds.series.push_back(std::move(series));
    }
    if (ds.series.empty()) throw Error("load_ucr_tsv: empty file " + path);

    // remap labels onto 0..K-1 preserving sorted original order
    std::map<int, int> remap;
    for (int l : raw_labels) remap.emplace(l, 0);
    int next = 0;
    for (auto& [orig, mapped] : remap) mapped = next++;
    ds.labels.reserve(raw_labels.size());
    for (int l : raw_labels) ds.labels.push_back(remap[l]);
    ds.classes = remap.size();
    return ds;
}

void znormalize(UcrDataset& ds) {
    for (auto& s : ds.series) {
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(s.size());
        double var = 0.0;
        for (double v : s) var += (v - mean) * (v - mean);
        var /= static_cast<double>(s.size());
        if (var == 0.0) {
            std::fill(s.begin(), s.end(), 0.0);
            continue;
        }
        const double inv = 1.0 / std::sqrt(var);
        for (double& v : s) v = (v - mean) * inv;
    }
}

UcrDataset make_frequency_dataset(std::size_t per_class, std::size_t length,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 0.1);
    const double freqs[2] = {2.0, 5.0};
    UcrDataset ds;
    ds.classes = 2;
    ds.length = length;
    for (int cls = 0; cls < 2; ++cls) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> s(length);
            const double ph = phase(rng);
            for (std::size_t t = 0; t < length; ++t) {
                const double arg = 2.0 * std::numbers::pi * freqs[cls] *
                                       static_cast<double>(t) /
                                       static_cast<double>(length) +
                                   ph;
                s[t] = std::sin(arg) + noise(rng);
            }
            ds.series.push_back(std::move(s));
            ds.labels.push_back(cls);
        }
    }
    return ds;
}

void write_ucr_tsv(const std::string& path, const UcrDataset& ds) {
    std::ofstream file(path);
    if (!file) throw Error("write_ucr_tsv: cannot open " + path);
    file.precision(17);
    for (std::size_t i = 0; i < ds.series.size(); ++i) {
        file << ds.labels[i];
        for (double v : ds.series[i]) file << '\t' << v;
        file << '\n';
    }
    if (!file) throw Error("write_ucr_tsv: write failure on " + path);
}

}  // namespace lznet::tasks

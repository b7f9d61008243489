#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lznet/common.hpp"

namespace lznet::tasks {

/// Two-channel regression batch: values in [0,1), a two-hot indicator row
/// (one hot in each half), target = sum of the two indicated values.
struct AdditionBatch {
    std::size_t batch, steps;
    std::vector<double> values;      // B x T
    std::vector<double> indicators;  // B x T
    std::vector<double> targets;     // B
};

AdditionBatch gen_addition(std::size_t steps, std::size_t batch, std::uint64_t seed);

/// Variance of the sum of two independent U[0,1) around its mean: 1/6.
double addition_baseline_mse();

/// Token layout: [N symbols from 1..M] [T-1 blanks] [delimiter=M+1] [N blanks];
/// target: [N+T blanks] [the N symbols]. Blank token is 0.
struct CopyBatch {
    std::size_t batch, length;  // length = T + 2N
    std::size_t n_items, n_symbols, delay;
    std::vector<int> inputs;   // B x length
    std::vector<int> targets;  // B x length
};

CopyBatch gen_copy(std::size_t n_items, std::size_t n_symbols, std::size_t delay,
                   std::size_t batch, std::uint64_t seed);

/// N ln M / (T + 2N): cross-entropy of the constant baseline.
double copy_baseline_ce(std::size_t n_items, std::size_t n_symbols, std::size_t delay);

struct UcrDataset {
    std::vector<int> labels;                  // remapped to 0..K-1
    std::vector<std::vector<double>> series;  // equal lengths
    std::size_t classes = 0;
    std::size_t length = 0;
};

/// One series per line: integer label first, then the values, tab- or
/// comma-separated. Ragged rows are rejected with the offending line number.
UcrDataset load_ucr_tsv(const std::string& path);

/// Shifts/scales each series to mean 0, population std 1; constant series
/// map to all-zeros.
void znormalize(UcrDataset& ds);

/// Two-class frequency-motif dataset in UCR layout, for end-to-end
/// classification runs: sinusoids at distinct frequencies with random phase
/// and mild noise.
UcrDataset make_frequency_dataset(std::size_t per_class, std::size_t length,
                                  std::uint64_t seed);

/// Writes a dataset in the UCR text format.
void write_ucr_tsv(const std::string& path, const UcrDataset& ds);

}  // namespace lznet::tasks

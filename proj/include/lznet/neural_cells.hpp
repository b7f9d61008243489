#pragma once

#include <cstdint>

#include "lznet/tape.hpp"

namespace lznet::nn {

/// Single-layer LSTM parameters, gate order i, f, g, o along the 4H axis.
struct LstmParams {
    ad::Tensor w_ih;  // 4H x I
    ad::Tensor w_hh;  // 4H x H
    ad::Tensor bias;  // 4H
    std::size_t hidden_size() const { return w_hh.shape()[1]; }
    std::size_t input_size() const { return w_ih.shape()[1]; }
};

/// Bilinear novelty score parameters: p = sigmoid(r_hat^T W r + b).
struct NoveltyParams {
    ad::Tensor w;     // H x H
    ad::Tensor bias;  // scalar
};

/// Affine readout head.
struct HeadParams {
    ad::Tensor w;     // K x H
    ad::Tensor bias;  // K
};

/// Uniform [-1/sqrt(H), 1/sqrt(H)] weights, forget-gate bias set to +1.
LstmParams init_lstm(std::size_t input, std::size_t hidden, std::uint64_t seed);

/// bias_init must be one of {-1, 0, 1} and lands in the bias field exactly.
NoveltyParams init_novelty(std::size_t hidden, double bias_init, std::uint64_t seed);

HeadParams init_head(std::size_t hidden, std::size_t out, std::uint64_t seed);

/// Tape handles for one forward/backward region.
struct LstmValues {
    ad::Value w_ih, w_hh, bias;
};
struct NoveltyValues {
    ad::Value w, bias;
};
struct HeadValues {
    ad::Value w, bias;
};

LstmValues on_tape(ad::Tape& tape, const LstmParams& p, bool requires_grad);
NoveltyValues on_tape(ad::Tape& tape, const NoveltyParams& p, bool requires_grad);
HeadValues on_tape(ad::Tape& tape, const HeadParams& p, bool requires_grad);

struct LstmStep {
    ad::Value h_hat;  // B x H
    ad::Value c;      // B x H
};

/// One LSTM step over a batch: x (B x I), h and c (B x H).
LstmStep lstm_cell(ad::Tape& tape, ad::Value x, ad::Value h, ad::Value c,
                   const LstmValues& params);

enum class NoveltyMode { kSoft, kHard };

/// Novelty score per batch row. r may be a shared length-H reference
/// (the tag) or a per-row B x H matrix. Hard mode samples Bernoulli(s)
/// with a straight-through backward.
ad::Value novelty_score(ad::Tape& tape, ad::Value r_hat, ad::Value r,
                        const NoveltyValues& params, NoveltyMode mode,
                        std::mt19937_64& rng);

/// Affine map y = x W^T + bias for a B x H input.
ad::Value apply_head(ad::Tape& tape, ad::Value x, const HeadValues& head);

}  // namespace lznet::nn

#include "lznet/neural_cells.hpp"

#include <cmath>

namespace lznet::nn {

LstmParams init_lstm(std::size_t input, std::size_t hidden, std::uint64_t seed) {
    if (input == 0 || hidden == 0) throw InvalidDimensionError("init_lstm: zero size");
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    LstmParams p;
    p.w_ih = ad::Tensor::uniform({4 * hidden, input}, -bound, bound, rng);
    p.w_hh = ad::Tensor::uniform({4 * hidden, hidden}, -bound, bound, rng);
    p.bias = ad::Tensor::uniform({4 * hidden}, -bound, bound, rng);
    for (std::size_t i = hidden; i < 2 * hidden; ++i) p.bias[i] = 1.0;  // forget gate
    return p;
}

NoveltyParams init_novelty(std::size_t hidden, double bias_init, std::uint64_t seed) {
    if (hidden == 0) throw InvalidDimensionError("init_novelty: zero size");
    if (bias_init != 0.0 && bias_init != 1.0 && bias_init != -1.0) {
        throw ConfigError("init_novelty: bias_init must be one of {-1, 0, 1}");
    }
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    NoveltyParams p;
    p.w = ad::Tensor::uniform({hidden, hidden}, -bound, bound, rng);
    p.bias = ad::Tensor::scalar(bias_init);
    return p;
}

HeadParams init_head(std::size_t hidden, std::size_t out, std::uint64_t seed) {
    if (hidden == 0 || out == 0) throw InvalidDimensionError("init_head: zero size");
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    HeadParams p;
    p.w = ad::Tensor::uniform({out, hidden}, -bound, bound, rng);
    p.bias = ad::Tensor({out});
    return p;
}

LstmValues on_tape(ad::Tape& tape, const LstmParams& p, bool requires_grad) {
    return {tape.leaf(p.w_ih, requires_grad), tape.leaf(p.w_hh, requires_grad),
            tape.leaf(p.bias, requires_grad)};
}

NoveltyValues on_tape(ad::Tape& tape, const NoveltyParams& p, bool requires_grad) {
    return {tape.leaf(p.w, requires_grad), tape.leaf(p.bias, requires_grad)};
}

HeadValues on_tape(ad::Tape& tape, const HeadParams& p, bool requires_grad) {
    return {tape.leaf(p.w, requires_grad), tape.leaf(p.bias, requires_grad)};
}

LstmStep lstm_cell(ad::Tape& tape, ad::Value x, ad::Value h, ad::Value c,
                   const LstmValues& params) {
    const std::size_t hidden = params.w_hh.val().shape()[1];
    auto pre = tape.add_rowvec(tape.add(tape.matmul(x, params.w_ih, true),
                                        tape.matmul(h, params.w_hh, true)),
                               params.bias);
    auto gate_i = tape.sigmoid(tape.slice_cols(pre, 0, hidden));
    auto gate_f = tape.sigmoid(tape.slice_cols(pre, hidden, 2 * hidden));
    auto gate_g = tape.tanh(tape.slice_cols(pre, 2 * hidden, 3 * hidden));
    auto gate_o = tape.sigmoid(tape.slice_cols(pre, 3 * hidden, 4 * hidden));
    auto c_new = tape.add(tape.mul(gate_f, c), tape.mul(gate_i, gate_g));
    auto h_hat = tape.mul(gate_o, tape.tanh(c_new));
    return {h_hat, c_new};
}

ad::Value novelty_score(ad::Tape& tape, ad::Value r_hat, ad::Value r,
                        const NoveltyValues& params, NoveltyMode mode,
                        std::mt19937_64& rng) {
    auto s = tape.sigmoid(tape.bilinear(r_hat, params.w, r, params.bias));
    if (mode == NoveltyMode::kSoft) return s;
    return tape.bernoulli(s, rng, /*straight_through=*/true);
}

ad::Value apply_head(ad::Tape& tape, ad::Value x, const HeadValues& head) {
    return tape.add_rowvec(tape.matmul(x, head.w, true), head.bias);
}

}  // namespace lznet::nn

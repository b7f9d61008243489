#include "lznet/lz_layer.hpp"

#include <cmath>

namespace lznet::lz {

vsa::HyperVector layer_tag(std::size_t hidden, std::uint64_t memory_seed) {
    return vsa::project_unitary(vsa::random_hypervector(hidden, memory_seed));
}

LzLayerState fresh_state(ad::Tape& tape, std::size_t batch, std::size_t hidden,
                         const LzLayerConfig& config) {
    LzLayerState state;
    state.h = tape.constant(ad::Tensor({batch, hidden}));
    state.c = tape.constant(ad::Tensor({batch, hidden}));
    if (config.backend != memory::Backend::kHopfield) {
        state.m = tape.constant(ad::Tensor({batch, hidden}));
    }
    return state;
}

namespace {

struct QueryPair {
    ad::Value r_hat;
    ad::Value r;
};

QueryPair query_memory(ad::Tape& tape, const LzLayerState& state, ad::Value h_hat,
                       ad::Value tag, const LzLayerConfig& config, double beta) {
    switch (config.backend) {
        case memory::Backend::kHrr:
            // pseudo-inverse unbind: correlate m with the unit-spectrum
            // projection of the query
            return {tape.circ_corr(state.m, tape.spectral_normalize(h_hat)), tag};
        case memory::Backend::kVtb:
            return {tape.vtb_unbind(state.m, h_hat), tag};
        case memory::Backend::kHopfield: {
            const auto& shape = h_hat.val().shape();
            if (state.patterns.empty()) {
                return {tape.constant(ad::Tensor(shape)), h_hat};
            }
            std::vector<ad::Value> scores;
            scores.reserve(state.patterns.size());
            for (std::size_t i = 0; i < state.patterns.size(); ++i) {
                auto sim = tape.affine(tape.row_dot(state.patterns[i], h_hat), beta, 0.0);
                // log-weight; the epsilon keeps hard-mode zero weights finite
                auto logw = tape.log(tape.affine(state.weights[i], 1.0, 1e-12));
                scores.push_back(tape.add(sim, logw));
            }
            auto attn = tape.softmax_rows(tape.stack_cols(scores));
            ad::Value r_hat;
            for (std::size_t i = 0; i < state.patterns.size(); ++i) {
                auto term =
                    tape.row_scale(state.patterns[i], tape.slice_cols(attn, i, i + 1));
                r_hat = (i == 0) ? term : tape.add(r_hat, term);
            }
            return {r_hat, h_hat};
        }
    }
    throw Error("query_memory: unreachable");
}

}  // namespace

LzStepResult lz_step(ad::Tape& tape, LzLayerState& state, ad::Value x_t,
                     const nn::LstmValues& lstm, const nn::NoveltyValues& novelty,
                     const LzLayerConfig& config, ad::Value tag,
                     std::span<std::mt19937_64> hard_rngs) {
    const std::size_t hidden = lstm.w_hh.val().shape()[1];
    const std::size_t batch = x_t.val().rows();
    const double beta = config.hopfield_beta > 0.0
                            ? config.hopfield_beta
                            : 1.0 / std::sqrt(static_cast<double>(hidden));

    auto cell = nn::lstm_cell(tape, x_t, state.h, state.c, lstm);

    ad::Value p;
    if (config.mode == GateMode::kPinnedZero) {
        p = tape.constant(ad::Tensor({batch}));
    } else {
        auto q = query_memory(tape, state, cell.h_hat, tag, config, beta);
        auto s = tape.sigmoid(tape.bilinear(q.r_hat, novelty.w, q.r, novelty.bias));
        p = (config.mode == GateMode::kSoft)
                ? s
                : tape.bernoulli_per_row(s, hard_rngs, /*straight_through=*/true);
    }

    // weighted insert: p * h_hat goes into the memory
    if (config.mode != GateMode::kPinnedZero) {
        switch (config.backend) {
            case memory::Backend::kHrr:
                state.m = tape.add(state.m,
                                   tape.row_scale(tape.circ_conv(cell.h_hat, tag), p));
                break;
            case memory::Backend::kVtb:
                state.m = tape.add(state.m,
                                   tape.row_scale(tape.vtb_bind(cell.h_hat, tag), p));
                break;
            case memory::Backend::kHopfield:
                state.patterns.push_back(cell.h_hat);
                state.weights.push_back(p);
                break;
        }
    }

    // reset gate: h_t = (1 - p) * h_hat, and c likewise when configured
    auto keep = tape.affine(p, -1.0, 1.0);
    state.h = tape.row_scale(cell.h_hat, keep);
    state.c = config.reset_cell ? tape.row_scale(cell.c, keep) : cell.c;
    return {cell.h_hat, p};
}

LzLayerOutput lz_forward(ad::Tape& tape, std::span<const ad::Tensor> x_seq,
                         const nn::LstmValues& lstm, const nn::NoveltyValues& novelty,
                         std::size_t hidden, const LzLayerConfig& config,
                         std::span<std::mt19937_64> hard_rngs) {
    if (x_seq.empty()) throw Error("lz_forward: empty sequence");
    const std::size_t batch = x_seq[0].rows();
    if (config.backend == memory::Backend::kVtb) vsa::vtb_block_side(hidden);
    if (config.mode == GateMode::kHard && hard_rngs.size() != batch) {
        throw Error("lz_forward: hard mode needs one RNG stream per sequence");
    }

    ad::Value tag;
    if (config.backend != memory::Backend::kHopfield) {
        tag = tape.constant(
            ad::Tensor({hidden}, layer_tag(hidden, config.memory_seed)));
    }

    LzLayerOutput out;
    out.state = fresh_state(tape, batch, hidden, config);
    out.h_hats.reserve(x_seq.size());
    out.p_mask.reserve(x_seq.size());
    for (const auto& x_t : x_seq) {
        auto step = lz_step(tape, out.state, tape.constant(x_t), lstm, novelty, config,
                            tag, hard_rngs);
        out.h_hats.push_back(step.h_hat);
        out.p_mask.push_back(step.p);
    }

    if (config.backend == memory::Backend::kHopfield) {
        // p-weighted bundle of inserted patterns; the closest analog of the
        // VSA superposition for readout and reporting
        ad::Value bundle = tape.constant(ad::Tensor({batch, hidden}));
        for (std::size_t i = 0; i < out.state.patterns.size(); ++i) {
            bundle = tape.add(
                bundle, tape.row_scale(out.state.patterns[i], out.state.weights[i]));
        }
        out.memory_state = bundle;
    } else {
        out.memory_state = out.state.m;
    }
    return out;
}

std::vector<ad::Value> lstm_forward(ad::Tape& tape, std::span<const ad::Tensor> x_seq,
                                    const nn::LstmValues& lstm, std::size_t hidden) {
    if (x_seq.empty()) throw Error("lstm_forward: empty sequence");
    const std::size_t batch = x_seq[0].rows();
    ad::Value h = tape.constant(ad::Tensor({batch, hidden}));
    ad::Value c = tape.constant(ad::Tensor({batch, hidden}));
    std::vector<ad::Value> h_hats;
    h_hats.reserve(x_seq.size());
    for (const auto& x_t : x_seq) {
        auto step = nn::lstm_cell(tape, tape.constant(x_t), h, c, lstm);
        h = step.h_hat;
        c = step.c;
        h_hats.push_back(step.h_hat);
    }
    return h_hats;
}

ad::Value readout(ad::Tape& tape, const LzLayerOutput& output,
                  const nn::HeadValues& head, ReadoutSource source) {
    ad::Value input = (source == ReadoutSource::kMemory) ? output.memory_state
                                                         : output.h_hats.back();
    return nn::apply_head(tape, input, head);
}

}  // namespace lznet::lz

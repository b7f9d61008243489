#pragma once

#include <span>

#include "lznet/assoc_memory.hpp"
#include "lznet/neural_cells.hpp"

namespace lznet::lz {

/// Per-step novelty handling: soft keeps sigma(s) as the gate, hard samples
/// Bernoulli(s) with a straight-through backward, pinned-zero disables the
/// gate entirely (the layer reduces to a plain LSTM; test hook).
enum class GateMode { kSoft, kHard, kPinnedZero };

struct LzLayerConfig {
    memory::Backend backend = memory::Backend::kHrr;
    GateMode mode = GateMode::kSoft;
    bool reset_cell = true;       // scale c by (1 - p) alongside h
    std::uint64_t memory_seed = 0;  // tag derivation (VSA backends)
    double hopfield_beta = 0.0;     // 0 -> 1/sqrt(H)
};

/// Recurrent state across steps; all tensors live on the tape.
/// For VSA backends `m` is the B x H superposition; the Hopfield backend
/// keeps the inserted patterns and their weights instead.
struct LzLayerState {
    ad::Value h;  // B x H, post-reset
    ad::Value c;  // B x H
    ad::Value m;
    std::vector<ad::Value> patterns;
    std::vector<ad::Value> weights;
};

struct LzLayerOutput {
    std::vector<ad::Value> h_hats;  // T entries, B x H
    std::vector<ad::Value> p_mask;  // T entries, B
    ad::Value memory_state;         // final m; Hopfield: p-weighted pattern bundle
    LzLayerState state;
};

/// The fixed unitary tag bound to every insertion (VSA backends).
vsa::HyperVector layer_tag(std::size_t hidden, std::uint64_t memory_seed);

LzLayerState fresh_state(ad::Tape& tape, std::size_t batch, std::size_t hidden,
                         const LzLayerConfig& config);

struct LzStepResult {
    ad::Value h_hat;  // B x H (pre-reset)
    ad::Value p;      // B
};

/// One step: LSTM cell, memory query, novelty gate, weighted insert,
/// (1 - p) reset. `tag` must be the layer_tag constant for VSA backends.
LzStepResult lz_step(ad::Tape& tape, LzLayerState& state, ad::Value x_t,
                     const nn::LstmValues& lstm, const nn::NoveltyValues& novelty,
                     const LzLayerConfig& config, ad::Value tag,
                     std::span<std::mt19937_64> hard_rngs);

/// Folds lz_step over a sequence from a fresh state. x_seq holds one
/// B x I tensor per step. hard_rngs supplies one stream per batch row
/// (hard mode only; may be empty otherwise).
LzLayerOutput lz_forward(ad::Tape& tape, std::span<const ad::Tensor> x_seq,
                         const nn::LstmValues& lstm, const nn::NoveltyValues& novelty,
                         std::size_t hidden, const LzLayerConfig& config,
                         std::span<std::mt19937_64> hard_rngs = {});

/// Plain LSTM over the same inputs; returns every h_hat.
std::vector<ad::Value> lstm_forward(ad::Tape& tape, std::span<const ad::Tensor> x_seq,
                                    const nn::LstmValues& lstm, std::size_t hidden);

enum class ReadoutSource { kFinalHidden, kMemory };

/// Affine readout from the final preliminary hidden state (default) or the
/// final memory state.
ad::Value readout(ad::Tape& tape, const LzLayerOutput& output,
                  const nn::HeadValues& head,
                  ReadoutSource source = ReadoutSource::kFinalHidden);

}  // namespace lznet::lz

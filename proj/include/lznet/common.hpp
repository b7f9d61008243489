#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lznet {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimension is out of range for the operation (d < 2, not a perfect square, ...).
struct InvalidDimensionError : Error {
    using Error::Error;
};

/// Two operands that must share a dimension/shape do not.
struct ShapeMismatchError : Error {
    using Error::Error;
};

/// A spectral component fell below the invertibility tolerance.
struct DegenerateSpectrumError : Error {
    using Error::Error;
};

/// Cosine similarity of a zero-norm vector.
struct UndefinedSimilarityError : Error {
    using Error::Error;
};

/// Backward pass reached an op recorded as non-differentiable.
struct NonDifferentiablePathError : Error {
    using Error::Error;
};

/// Checkpoint file is unreadable, truncated, or has the wrong version.
struct CorruptCheckpointError : Error {
    using Error::Error;
};

/// Bad config file or CLI usage.
struct ConfigError : Error {
    using Error::Error;
};

/// Smallest spectral magnitude considered invertible.
inline constexpr double kSpectrumEpsilon = 1e-12;

// splitmix64; used to derive independent RNG streams from (seed, tag...) keys
// so that resumed runs replay the exact same data order.
inline std::uint64_t split_mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = split_mix64(seed ^ 0x5bf03635f0935debULL);
    h = split_mix64(h ^ a);
    h = split_mix64(h ^ b);
    h = split_mix64(h ^ c);
    return h;
}

}  // namespace lznet

#include "lznet/vsa.hpp"

#include <cmath>
#include <random>

#include "lznet/fft.hpp"

namespace lznet::vsa {

namespace {

void require_same_dim(const HyperVector& a, const HyperVector& b, const char* op) {
    if (a.size() != b.size()) {
        throw ShapeMismatchError(std::string(op) + ": dimension mismatch (" +
                                 std::to_string(a.size()) + " vs " +
                                 std::to_string(b.size()) + ")");
    }
}

std::vector<fft::cplx> checked_spectrum(const HyperVector& x, const char* op) {
    auto spec = fft::spectrum(x);
    for (const auto& z : spec) {
        if (std::abs(z) < kSpectrumEpsilon) {
            throw DegenerateSpectrumError(std::string(op) +
                                          ": spectral component below tolerance");
        }
    }
    return spec;
}

}  // namespace

HyperVector random_hypervector(std::size_t d, std::uint64_t seed) {
    if (d < 2) throw InvalidDimensionError("random_hypervector: d must be >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    HyperVector v(d);
    for (auto& e : v) e = gauss(rng);
    return v;
}

HyperVector project_unitary(const HyperVector& x) {
    if (x.size() < 2) throw InvalidDimensionError("project_unitary: d must be >= 2");
    auto spec = checked_spectrum(x, "project_unitary");
    for (auto& z : spec) z /= std::abs(z);
    return fft::inverse_real(std::move(spec));
}

bool is_unitary(const HyperVector& x, double tol) {
    for (const auto& z : fft::spectrum(x)) {
        if (std::abs(std::abs(z) - 1.0) > tol) return false;
    }
    return true;
}

HyperVector bind_hrr(const HyperVector& a, const HyperVector& b) {
    require_same_dim(a, b, "bind_hrr");
    auto sa = fft::spectrum(a);
    auto sb = fft::spectrum(b);
    for (std::size_t k = 0; k < sa.size(); ++k) sa[k] *= sb[k];
    return fft::inverse_real(std::move(sa));
}

HyperVector pseudo_inverse(const HyperVector& a) {
    auto spec = checked_spectrum(a, "pseudo_inverse");
    for (auto& z : spec) z = std::conj(z) / std::abs(z);
    return fft::inverse_real(std::move(spec));
}

HyperVector unbind_hrr(const HyperVector& s, const HyperVector& a) {
    require_same_dim(s, a, "unbind_hrr");
    auto ss = fft::spectrum(s);
    auto sa = checked_spectrum(a, "unbind_hrr");
    for (std::size_t k = 0; k < ss.size(); ++k) {
        ss[k] *= std::conj(sa[k]) / std::abs(sa[k]);
    }
    return fft::inverse_real(std::move(ss));
}

std::size_t vtb_block_side(std::size_t d) {
    if (d < 4) throw InvalidDimensionError("vtb: d must be a perfect square >= 4");
    auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    if (side * side != d) {
        throw InvalidDimensionError("vtb: d = " + std::to_string(d) +
                                    " is not a perfect square");
    }
    return side;
}

// Chunk r of the output is d^{1/4} * Y * x_r, with Y the row-major reshape
// of y and x_r the r-th length-sqrt(d) chunk of x.
HyperVector bind_vtb(const HyperVector& x, const HyperVector& y) {
    require_same_dim(x, y, "bind_vtb");
    const std::size_t d = x.size();
    const std::size_t side = vtb_block_side(d);
    const double scale = std::pow(static_cast<double>(d), 0.25);
    HyperVector out(d, 0.0);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t i = 0; i < side; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < side; ++j) {
                acc += y[i * side + j] * x[r * side + j];
            }
            out[r * side + i] = scale * acc;
        }
    }
    return out;
}

HyperVector unbind_vtb(const HyperVector& s, const HyperVector& y) {
    require_same_dim(s, y, "unbind_vtb");
    const std::size_t d = s.size();
    const std::size_t side = vtb_block_side(d);
    const double scale = std::pow(static_cast<double>(d), 0.25);
    HyperVector out(d, 0.0);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t i = 0; i < side; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < side; ++j) {
                acc += y[j * side + i] * s[r * side + j];
            }
            out[r * side + i] = scale * acc;
        }
    }
    return out;
}

HyperVector bundle(std::span<const HyperVector> vs, std::span<const double> weights) {
    if (vs.size() != weights.size()) {
        throw ShapeMismatchError("bundle: weights length does not match vector count");
    }
    if (vs.empty()) throw ShapeMismatchError("bundle: empty input");
    const std::size_t d = vs.front().size();
    HyperVector out(d, 0.0);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (vs[i].size() != d) throw ShapeMismatchError("bundle: dimension mismatch");
        for (std::size_t j = 0; j < d; ++j) out[j] += weights[i] * vs[i][j];
    }
    return out;
}

double dot(const HyperVector& a, const HyperVector& b) {
    require_same_dim(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(const HyperVector& a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(const HyperVector& a, const HyperVector& b) {
    require_same_dim(a, b, "cosine_similarity");
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw UndefinedSimilarityError("cosine_similarity: zero-norm input");
    }
    return dot(a, b) / (na * nb);
}

}  // namespace lznet::vsa

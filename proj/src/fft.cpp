#include "lznet/fft.hpp"

#include <cmath>
#include <numbers>

#include "lznet/common.hpp"

namespace lznet::fft {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Forward twiddles w^j = e^{-2pi i j / n} for j < n/2, cached per size.
const std::vector<cplx>& twiddles(std::size_t n) {
    thread_local std::vector<std::vector<cplx>> cache;  // indexed by log2(n)
    std::size_t log2n = 0;
    while ((1ull << log2n) < n) ++log2n;
    if (cache.size() <= log2n) cache.resize(log2n + 1);
    auto& table = cache[log2n];
    if (table.empty()) {
        table.resize(std::max<std::size_t>(n / 2, 1));
        for (std::size_t j = 0; j < table.size(); ++j) {
            const double ang =
                -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
            table[j] = cplx(std::cos(ang), std::sin(ang));
        }
    }
    return table;
}

// Iterative radix-2 Cooley-Tukey, unnormalized, n a power of two.
void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& table = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const cplx tw = table[j * stride];
                const cplx w = inverse ? std::conj(tw) : tw;
                const cplx u = a[i + j];
                const cplx v = a[i + j + half] * w;
                a[i + j] = u + v;
                a[i + j + half] = u - v;
            }
        }
    }
}

// Bluestein chirp-z: arbitrary-length DFT via one power-of-two convolution.
void fft_bluestein(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = sign * std::numbers::pi * static_cast<double>(k2) /
                           static_cast<double>(n);
        chirp[k] = cplx(std::cos(ang), std::sin(ang));
    }
    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<cplx> u(m, cplx(0.0)), v(m, cplx(0.0));
    for (std::size_t k = 0; k < n; ++k) u[k] = a[k] * chirp[k];
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = std::conj(chirp[k]);
        if (k != 0) v[m - k] = std::conj(chirp[k]);
    }
    fft_pow2(u, false);
    fft_pow2(v, false);
    for (std::size_t k = 0; k < m; ++k) u[k] *= v[k];
    fft_pow2(u, true);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = u[k] * chirp[k] * scale;
}

}  // namespace

void transform(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0) throw InvalidDimensionError("fft: empty input");
    if (n == 1) return;
    if (is_pow2(n)) {
        fft_pow2(a, inverse);
    } else {
        fft_bluestein(a, inverse);
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= scale;
    }
}

// Real input packed into a half-size complex transform; same DFT values
// at roughly half the work. Even n only.
std::vector<cplx> spectrum(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n == 0) throw InvalidDimensionError("fft: empty input");
    if (n % 2 != 0 || n < 4) {
        std::vector<cplx> a(x.begin(), x.end());
        transform(a, false);
        return a;
    }
    const std::size_t m = n / 2;
    std::vector<cplx> z(m);
    for (std::size_t k = 0; k < m; ++k) z[k] = cplx(x[2 * k], x[2 * k + 1]);
    transform(z, false);

    std::vector<cplx> out(n);
    for (std::size_t k = 0; k <= m / 2; ++k) {
        const cplx zk = z[k];
        const cplx zmk = std::conj(z[(m - k) % m]);
        const cplx even = 0.5 * (zk + zmk);
        const cplx odd = cplx(0.0, -0.5) * (zk - zmk);
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(n);
        const cplx w(std::cos(ang), std::sin(ang));
        out[k] = even + w * odd;
        out[k + m] = even - w * odd;
        // conjugate symmetry fills the mirrored bins
        out[(n - k) % n] = std::conj(out[k]);
        if (k != 0) out[m - k] = std::conj(out[m + k]);
    }
    return out;
}

std::vector<double> inverse_real(std::vector<cplx> spec) {
    const std::size_t n = spec.size();
    if (n == 0) throw InvalidDimensionError("fft: empty input");
    if (n % 2 != 0 || n < 4) {
        transform(spec, true);
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(spec[i].imag()) > 1e-9) {
                throw Error("fft: inverse transform has non-real residue");
            }
            out[i] = spec[i].real();
        }
        return out;
    }
    // a non-real inverse shows up as broken conjugate symmetry; the check is
    // equivalent to the imaginary-residue test on the slow path
    const double limit = 1e-9;
    if (std::abs(spec[0].imag()) > limit || std::abs(spec[n / 2].imag()) > limit) {
        throw Error("fft: inverse transform has non-real residue");
    }
    for (std::size_t k = 1; k < n / 2; ++k) {
        if (std::abs(spec[k] - std::conj(spec[n - k])) > limit) {
            throw Error("fft: inverse transform has non-real residue");
        }
    }
    const std::size_t m = n / 2;
    std::vector<cplx> z(m);
    for (std::size_t k = 0; k < m; ++k) {
        const cplx xk = spec[k];
        const cplx xkm = spec[k + m];
        const cplx even = 0.5 * (xk + xkm);
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(n);
        const cplx winv(std::cos(ang), std::sin(ang));
        const cplx odd = 0.5 * winv * (xk - xkm);
        z[k] = even + cplx(0.0, 1.0) * odd;
    }
    transform(z, true);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < m; ++k) {
        out[2 * k] = z[k].real();
        out[2 * k + 1] = z[k].imag();
    }
    return out;
}

}  // namespace lznet::fft

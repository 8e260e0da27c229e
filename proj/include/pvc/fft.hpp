// Iterative radix-2 FFT, enough for the 512-point spectra used by the MFCC,
// HNR and STOI paths.

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "pvc/errors.hpp"

namespace pvc {

inline bool is_power_of_two(size_t n) { return n && (n & (n - 1)) == 0; }

inline size_t next_power_of_two(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false) {
    size_t n = a.size();
    if (!is_power_of_two(n)) throw DimensionError("fft size must be a power of two");
    // Bit reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k];
                auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

/// One-sided magnitude-squared spectrum of a real signal, zero-padded to
/// n_fft. Returns n_fft/2 + 1 bins.
inline std::vector<double> power_spectrum(const std::vector<double>& x, size_t n_fft) {
    std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
    size_t n = std::min(x.size(), n_fft);
    for (size_t i = 0; i < n; ++i) buf[i] = {x[i], 0.0};
    fft_inplace(buf);
    std::vector<double> p(n_fft / 2 + 1);
    for (size_t i = 0; i < p.size(); ++i) p[i] = std::norm(buf[i]);
    return p;
}

}  // namespace pvc

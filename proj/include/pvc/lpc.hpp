// Linear prediction core: autocorrelation analysis with Levinson-Durbin,
// conversion between prediction coefficients and line spectral pairs, and
// the LSP stabilization used on network outputs.
//
// Conventions: A(z) = 1 + a[1] z^-1 + ... + a[p] z^-p is the analysis
// (inverse) filter; lpc vectors hold a[1..p]. LSPs are the p ascending root
// angles in (0, pi) of the sum/difference polynomials, alternating
// sum-first.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pvc/errors.hpp"

namespace pvc {

constexpr int kLpcOrder = 24;
constexpr double kLspMinSeparation = 1e-3;  // radians

/// Biased autocorrelation r[0..max_lag].
inline std::vector<double> autocorrelation(const std::vector<double>& x, int max_lag) {
    std::vector<double> r(static_cast<size_t>(max_lag) + 1, 0.0);
    int n = static_cast<int>(x.size());
    for (int lag = 0; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (int i = 0; i + lag < n; ++i) acc += x[static_cast<size_t>(i)] * x[static_cast<size_t>(i + lag)];
        r[static_cast<size_t>(lag)] = acc;
    }
    return r;
}

/// Levinson-Durbin. Returns a[1..p] and writes the final prediction error
/// energy to *err_out when given. Reflection coefficients are clamped just
/// inside the unit circle, so the result is always a stable synthesis filter.
inline std::vector<double> levinson(const std::vector<double>& r, int order,
                                    double* err_out = nullptr) {
    std::vector<double> a(static_cast<size_t>(order) + 1, 0.0);
    a[0] = 1.0;
    double err = r[0];
    if (err <= 0.0) {
        if (err_out) *err_out = 0.0;
        return std::vector<double>(static_cast<size_t>(order), 0.0);
    }
    for (int i = 1; i <= order; ++i) {
        double acc = r[static_cast<size_t>(i)];
        for (int j = 1; j < i; ++j) acc += a[static_cast<size_t>(j)] * r[static_cast<size_t>(i - j)];
        double k = -acc / err;
        k = std::clamp(k, -0.9999, 0.9999);
        std::vector<double> prev(a.begin(), a.begin() + i);
        a[static_cast<size_t>(i)] = k;
        for (int j = 1; j < i; ++j)
            a[static_cast<size_t>(j)] = prev[static_cast<size_t>(j)] + k * prev[static_cast<size_t>(i - j)];
        err *= (1.0 - k * k);
    }
    if (err_out) *err_out = err;
    return std::vector<double>(a.begin() + 1, a.end());
}

/// a[1..p] from a windowed frame; err_out gets the residual energy.
/// A 60 Hz Gaussian lag window conditions the autocorrelation so the
/// envelope estimate does not beat against the pulse phase inside the frame.
inline std::vector<double> lpc_from_frame(const std::vector<double>& frame, int order,
                                          double* err_out = nullptr) {
    auto r = autocorrelation(frame, order);
    constexpr double kLagWindowHz = 60.0;
    for (int k = 1; k <= order; ++k) {
        double x = 2.0 * M_PI * kLagWindowHz * k / 16000.0;
        r[static_cast<size_t>(k)] *= std::exp(-0.5 * x * x);
    }
    r[0] = r[0] * (1.0 + 1e-6) + 1e-12;  // white-noise conditioning floor
    return levinson(r, order, err_out);
}

namespace detail {

// Full polynomial product accumulate: poly *= (1 - 2 cos(w) z^-1 + z^-2).
inline void mul_quadratic(std::vector<double>& poly, double omega) {
    double c = -2.0 * std::cos(omega);
    std::vector<double> out(poly.size() + 2, 0.0);
    for (size_t i = 0; i < poly.size(); ++i) {
        out[i] += poly[i];
        out[i + 1] += poly[i] * c;
        out[i + 2] += poly[i];
    }
    poly = std::move(out);
}

// Evaluate the symmetric half-polynomial c at cos-domain point x = cos(w):
// G(w) = c[m] + 2 sum_{i=1..m} c[m-i] T_i(x), via the Chebyshev recurrence.
inline double eval_sym_poly(const std::vector<double>& c, int m, double x) {
    double val = c[static_cast<size_t>(m)];
    double t_prev = 1.0, t_cur = x;
    for (int i = 1; i <= m; ++i) {
        val += 2.0 * c[static_cast<size_t>(m - i)] * t_cur;
        double t_next = 2.0 * x * t_cur - t_prev;
        t_prev = t_cur;
        t_cur = t_next;
    }
    return val;
}

// All m roots in (0, pi) of the symmetric polynomial, by grid scan plus
// bisection. The grid is refined until the expected root count is found.
inline std::vector<double> sym_poly_roots(const std::vector<double>& c, int m) {
    for (int grid = 4096; grid <= 262144; grid *= 4) {
        std::vector<double> roots;
        double prev_w = M_PI / (grid + 1);
        double prev_v = eval_sym_poly(c, m, std::cos(prev_w));
        for (int g = 2; g <= grid; ++g) {
            double w = M_PI * g / (grid + 1);
            double v = eval_sym_poly(c, m, std::cos(w));
            if (prev_v == 0.0) roots.push_back(prev_w);
            if ((prev_v < 0.0 && v > 0.0) || (prev_v > 0.0 && v < 0.0)) {
                double lo = prev_w, hi = w, vlo = prev_v;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    double vm = eval_sym_poly(c, m, std::cos(mid));
                    if ((vlo < 0.0) == (vm < 0.0)) {
                        lo = mid;
                        vlo = vm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push_back(0.5 * (lo + hi));
            }
            prev_w = w;
            prev_v = v;
        }
        if (static_cast<int>(roots.size()) == m) return roots;
    }
    throw DimensionError("lsp: failed to locate all sum/difference roots");
}

}  // namespace detail

/// LPC -> LSP for even order. Returns p ascending angles in (0, pi).
inline std::vector<double> lpc_to_lsp(const std::vector<double>& lpc) {
    int p = static_cast<int>(lpc.size());
    if (p % 2 != 0) throw DimensionError("lpc_to_lsp expects an even order");
    // A(z) coefficients including the leading 1.
    std::vector<double> a(static_cast<size_t>(p) + 1);
    a[0] = 1.0;
    for (int i = 0; i < p; ++i) a[static_cast<size_t>(i + 1)] = lpc[static_cast<size_t>(i)];

    // P(z) = A(z) + z^-(p+1) A(z^-1), Q(z) = A(z) - z^-(p+1) A(z^-1),
    // deflated by (1 + z^-1) and (1 - z^-1) respectively.
    std::vector<double> psum(static_cast<size_t>(p) + 2), qdif(static_cast<size_t>(p) + 2);
    for (int i = 0; i <= p + 1; ++i) {
        double ai = (i <= p) ? a[static_cast<size_t>(i)] : 0.0;
        double ar = (p + 1 - i <= p) ? a[static_cast<size_t>(p + 1 - i)] : 0.0;
        psum[static_cast<size_t>(i)] = ai + ar;
        qdif[static_cast<size_t>(i)] = ai - ar;
    }
    // Synthetic division by (1 + z^-1) and (1 - z^-1).
    std::vector<double> pd(static_cast<size_t>(p) + 1), qd(static_cast<size_t>(p) + 1);
    double carry = 0.0;
    for (int i = 0; i <= p; ++i) {
        pd[static_cast<size_t>(i)] = psum[static_cast<size_t>(i)] - carry;
        carry = pd[static_cast<size_t>(i)];
    }
    carry = 0.0;
    for (int i = 0; i <= p; ++i) {
        qd[static_cast<size_t>(i)] = qdif[static_cast<size_t>(i)] + carry;
        carry = qd[static_cast<size_t>(i)];
    }

    int m = p / 2;
    auto p_roots = detail::sym_poly_roots(pd, m);
    auto q_roots = detail::sym_poly_roots(qd, m);
    std::vector<double> lsp;
    lsp.reserve(static_cast<size_t>(p));
    for (int i = 0; i < m; ++i) {  // interlaced, sum polynomial first
        lsp.push_back(p_roots[static_cast<size_t>(i)]);
        lsp.push_back(q_roots[static_cast<size_t>(i)]);
    }
    std::sort(lsp.begin(), lsp.end());
    return lsp;
}

/// LSP -> LPC. Angles at even positions rebuild the sum polynomial, odd the
/// difference polynomial (the ordering lpc_to_lsp produces).
inline std::vector<double> lsp_to_lpc(const std::vector<double>& lsp) {
    int p = static_cast<int>(lsp.size());
    if (p % 2 != 0) throw DimensionError("lsp_to_lpc expects an even order");
    std::vector<double> pp{1.0}, qq{1.0};
    for (int i = 0; i < p; i += 2) detail::mul_quadratic(pp, lsp[static_cast<size_t>(i)]);
    for (int i = 1; i < p; i += 2) detail::mul_quadratic(qq, lsp[static_cast<size_t>(i)]);
    // Restore the deflated factors: P *= (1 + z^-1), Q *= (1 - z^-1).
    std::vector<double> pfull(pp.size() + 1, 0.0), qfull(qq.size() + 1, 0.0);
    for (size_t i = 0; i < pp.size(); ++i) {
        pfull[i] += pp[i];
        pfull[i + 1] += pp[i];
    }
    for (size_t i = 0; i < qq.size(); ++i) {
        qfull[i] += qq[i];
        qfull[i + 1] -= qq[i];
    }
    std::vector<double> lpc(static_cast<size_t>(p));
    for (int i = 1; i <= p; ++i)
        lpc[static_cast<size_t>(i - 1)] =
            0.5 * (pfull[static_cast<size_t>(i)] + qfull[static_cast<size_t>(i)]);
    return lpc;
}

/// Sort + minimum separation + range clamp; guarantees a stable filter after
/// lsp_to_lpc. Applied to raw network outputs.
inline void stabilize_lsp(std::vector<double>& lsp) {
    std::sort(lsp.begin(), lsp.end());
    double lo = kLspMinSeparation;
    for (auto& w : lsp) {
        if (w < lo) w = lo;
        lo = w + kLspMinSeparation;
    }
    // Clamp from the top, keeping separations intact.
    double hi = M_PI - kLspMinSeparation;
    for (auto it = lsp.rbegin(); it != lsp.rend(); ++it) {
        if (*it > hi) *it = hi;
        hi = *it - kLspMinSeparation;
    }
}

/// Residual of inverse filtering x through A(z), zero initial state.
inline std::vector<double> inverse_filter(const std::vector<double>& x,
                                          const std::vector<double>& lpc) {
    std::vector<double> e(x.size(), 0.0);
    int p = static_cast<int>(lpc.size());
    for (size_t n = 0; n < x.size(); ++n) {
        double acc = x[n];
        for (int j = 1; j <= p; ++j)
            if (n >= static_cast<size_t>(j)) acc += lpc[static_cast<size_t>(j - 1)] * x[n - static_cast<size_t>(j)];
        e[n] = acc;
    }
    return e;
}

}  // namespace pvc

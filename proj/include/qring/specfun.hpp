#pragma once

// Integer-order cylindrical Bessel functions J_m, N_m (= Y_m) and
// Jacobi-Anger harmonic weights.
//
// Evaluation regimes (x = argument, m = |order|):
//   J, x <= 1            ascending power series
//   J, x < 1000 or m > x Miller backward recurrence normalised by
//                        J_0 + 2 sum J_2k = 1
//   J, otherwise         Hankel asymptotic J_0, J_1 + forward recurrence
//                        (Miller is ~10x more accurate than this up to x = 500)
//   N, x <= 25           Neumann series for N_0, N_1 in terms of the
//                        Miller J sequence, then forward recurrence
//   N, x > 25            Hankel asymptotic N_0, N_1 + forward recurrence
// Negative orders are reduced with Z_{-m} = (-1)^m Z_m.

#include "qring/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <vector>

namespace qring::specfun {

inline constexpr int kMaxSupportedOrder = 200;

/// J_m, J_{m+1}, N_m, N_{m+1} at one argument.
struct CylinderValues {
    double j_m = 0.0;
    double j_m1 = 0.0;
    double n_m = 0.0;
    double n_m1 = 0.0;
};

namespace detail {

inline constexpr double kAsymptoticThreshold = 25.0;
inline constexpr double kJAsymptoticThreshold = 1000.0;
inline constexpr double kSeriesThreshold = 1.0;
inline constexpr double kRescaleBig = 1e200;
inline constexpr double kRescaleFactor = 1e-200;

inline void check_finite(double x, const char* fn) {
    if (!std::isfinite(x))
        throw qring::domain_error(std::string(fn) + ": argument must be finite");
}

inline void check_order(int m, const char* fn) {
    if (std::abs(m) > kMaxSupportedOrder + 1)
        throw qring::domain_error(std::string(fn) + ": |order| exceeds supported range");
}

inline double reflect_sign(int m) { return (m < 0 && (m & 1)) ? -1.0 : 1.0; }

/// Ascending series for J_n(x), n >= 0.
inline double j_series(int n, double x) {
    const double half = 0.5 * x;
    double lead = 1.0;
    for (int i = 1; i <= n; ++i) lead *= half / i;
    if (lead == 0.0) return 0.0;
    const double q = -half * half;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * (n + k));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return lead * sum;
}

/// Normalised J_0..J_top(x) by Miller's algorithm; returns the full backward
/// sequence so that callers can form Neumann sums.
inline std::vector<double> miller_sequence(double x, int nmax) {
    const int top = std::max(nmax, static_cast<int>(std::ceil(x)));
    int start = top + 16 + static_cast<int>(std::sqrt(160.0 * std::max(top, 1)));
    start += start & 1;
    std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
    double next = 0.0;
    double cur = 1e-30;
    double even_sum = 0.0;
    j[static_cast<std::size_t>(start)] = cur;
    for (int n = start; n > 0; --n) {
        const double prev = (2.0 * n / x) * cur - next;
        next = cur;
        cur = prev;
        j[static_cast<std::size_t>(n - 1)] = cur;
        if (((n - 1) & 1) == 0 && n - 1 > 0) even_sum += 2.0 * cur;
        if (std::abs(cur) > kRescaleBig) {
            for (int i = n - 1; i <= start; ++i) j[static_cast<std::size_t>(i)] *= kRescaleFactor;
            cur *= kRescaleFactor;
            next *= kRescaleFactor;
            even_sum *= kRescaleFactor;
        }
    }
    const double norm = 1.0 / (j[0] + even_sum);
    for (auto& v : j) v *= norm;
    return j;
}

struct HankelValues {
    double j;
    double y;
};

/// Hankel asymptotic expansion of J_nu, Y_nu for large x (nu = 0 or 1 here).
inline HankelValues hankel_asymptotic(int nu, double x) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0;
    double q = 0.0;
    double term = 1.0;
    double last = 1e300;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (k * 8.0 * x);
        const double mag = std::abs(term);
        if (mag > last) break;
        last = mag;
        if (k & 1) {
            q += ((k / 2) & 1 ? -term : term);
        } else {
            p += ((k / 2) & 1 ? -term : term);
        }
        if (mag < 1e-17) break;
    }
    const double chi = x - (0.5 * nu + 0.25) * std::numbers::pi;
    const double amp = std::sqrt(2.0 / (std::numbers::pi * x));
    const double c = std::cos(chi);
    const double s = std::sin(chi);
    return {amp * (p * c - q * s), amp * (p * s + q * c)};
}

/// J_n(x) for n >= 0, x > 0.
inline double j_nonneg(int n, double x) {
    if (x <= kSeriesThreshold) return j_series(n, x);
    if (x < kJAsymptoticThreshold || n > x) {
        auto seq = miller_sequence(x, n);
        return seq[static_cast<std::size_t>(n)];
    }
    const auto h0 = hankel_asymptotic(0, x);
    if (n == 0) return h0.j;
    const auto h1 = hankel_asymptotic(1, x);
    double jm = h0.j;
    double j = h1.j;
    for (int k = 1; k < n; ++k) {
        const double jp = (2.0 * k / x) * j - jm;
        jm = j;
        j = jp;
    }
    return j;
}

/// N_0 and N_1 from a Miller J sequence via Neumann-type series.
inline void neumann_y01(double x, const std::vector<double>& j, double& y0, double& y1) {
    const double lg = std::log(0.5 * x) + std::numbers::egamma;
    double s0 = 0.0;
    double s1 = 0.0;
    const std::size_t kmax = (j.size() - 2) / 2;
    for (std::size_t k = 1; k <= kmax; ++k) {
        const double sign = (k & 1) ? -1.0 : 1.0;
        s0 += sign * j[2 * k] / static_cast<double>(k);
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / static_cast<double>(k);
    }
    y0 = (2.0 / std::numbers::pi) * (lg * j[0] - 2.0 * s0);
    y1 = (2.0 / std::numbers::pi) * (lg * j[1] - j[0] / x + s1);
}

/// N_n and N_{n+1} for n >= 0, x > 0.
inline void y_nonneg_pair(int n, double x, double& yn, double& yn1) {
    double y0 = 0.0;
    double y1 = 0.0;
    if (x <= kAsymptoticThreshold) {
        const auto seq = miller_sequence(x, 2);
        neumann_y01(x, seq, y0, y1);
    } else {
        y0 = hankel_asymptotic(0, x).y;
        y1 = hankel_asymptotic(1, x).y;
    }
    double ym = y0;
    double y = y1;
    if (n == 0) {
        yn = y0;
        yn1 = y1;
        return;
    }
    for (int k = 1; k < n; ++k) {
        const double yp = (2.0 * k / x) * y - ym;
        ym = y;
        y = yp;
    }
    yn = y;
    yn1 = (2.0 * n / x) * y - ym;
}

} // namespace detail

/// Bessel function of the first kind J_m(x), x >= 0.
inline double bessel_j(int m, double x) {
    detail::check_finite(x, "bessel_j");
    detail::check_order(m, "bessel_j");
    if (x < 0.0) throw qring::domain_error("bessel_j: argument must be non-negative");
    const int n = std::abs(m);
    if (x == 0.0) return n == 0 ? 1.0 : 0.0;
    return detail::reflect_sign(m) * detail::j_nonneg(n, x);
}

/// Bessel function of the second kind N_m(x) (Weber, Y_m), x > 0.
inline double bessel_n(int m, double x) {
    detail::check_finite(x, "bessel_n");
    detail::check_order(m, "bessel_n");
    if (!(x > 0.0)) throw qring::domain_error("bessel_n: argument must be positive");
    const int n = std::abs(m);
    double yn = 0.0;
    double yn1 = 0.0;
    detail::y_nonneg_pair(n, x, yn, yn1);
    return detail::reflect_sign(m) * yn;
}

/// J and N of orders m and m+1 sharing one recurrence; x > 0.
inline CylinderValues cylinder_functions(int m, double x) {
    detail::check_finite(x, "cylinder_functions");
    detail::check_order(m, "cylinder_functions");
    detail::check_order(m + 1, "cylinder_functions");
    if (!(x > 0.0)) throw qring::domain_error("cylinder_functions: argument must be positive");

    // Orders m and m+1 map to |m| and |m+1|; both are non-negative and adjacent.
    const int lo = std::min(std::abs(m), std::abs(m + 1));
    const bool swapped = std::abs(m) > std::abs(m + 1);

    double j_lo = 0.0;
    double j_hi = 0.0;
    if (x <= detail::kSeriesThreshold) {
        j_lo = detail::j_series(lo, x);
        j_hi = detail::j_series(lo + 1, x);
    } else if (x < detail::kJAsymptoticThreshold || lo + 1 > x) {
        const auto seq = detail::miller_sequence(x, lo + 1);
        j_lo = seq[static_cast<std::size_t>(lo)];
        j_hi = seq[static_cast<std::size_t>(lo + 1)];
    } else {
        j_lo = detail::j_nonneg(lo, x);
        j_hi = detail::j_nonneg(lo + 1, x);
    }
    double y_lo = 0.0;
    double y_hi = 0.0;
    detail::y_nonneg_pair(lo, x, y_lo, y_hi);

    CylinderValues out;
    const int order_lo = swapped ? m + 1 : m;
    const int order_hi = swapped ? m : m + 1;
    const double s_lo = detail::reflect_sign(order_lo);
    const double s_hi = detail::reflect_sign(order_hi);
    const double jl = s_lo * j_lo, yl = s_lo * y_lo;
    const double jh = s_hi * j_hi, yh = s_hi * y_hi;
    if (swapped) {
        out = {jh, jl, yh, yl};
    } else {
        out = {jl, jh, yl, yh};
    }
    return out;
}

/// J_alpha(z) for alpha in [-cutoff, cutoff].
class HarmonicWeightTable {
public:
    HarmonicWeightTable() = default;
    HarmonicWeightTable(double z, int cutoff, std::vector<double> weights)
        : z_(z), cutoff_(cutoff), weights_(std::move(weights)) {}

    double z() const { return z_; }
    int cutoff() const { return cutoff_; }

    double operator()(int alpha) const {
        if (std::abs(alpha) > cutoff_) return 0.0;
        return weights_[static_cast<std::size_t>(alpha + cutoff_)];
    }

    double sum_of_squares() const {
        double s = 0.0;
        for (double w : weights_) s += w * w;
        return s;
    }

    const std::vector<double>& weights() const { return weights_; }

private:
    double z_ = 0.0;
    int cutoff_ = 0;
    std::vector<double> weights_;
};

inline constexpr double kJacobiAngerTailTolerance = 1e-10;

/// Smallest cutoff that is normally sufficient for argument z.
inline int recommended_cutoff(double z) {
    const double a = std::abs(z);
    return static_cast<int>(std::ceil(a + 12.0 + 6.0 * std::cbrt(a)));
}

/// Weights J_alpha(z) of exp(i z sin t) = sum_alpha J_alpha(z) exp(i alpha t).
/// Throws truncation_error when the discarded tail mass exceeds 1e-10.
inline HarmonicWeightTable jacobi_anger_weights(double z, int cutoff) {
    detail::check_finite(z, "jacobi_anger_weights");
    if (cutoff < 0) throw qring::parameter_error("jacobi_anger_weights: cutoff must be >= 0");
    const double a = std::abs(z);
    std::vector<double> w(2 * static_cast<std::size_t>(cutoff) + 1, 0.0);
    if (a == 0.0) {
        w[static_cast<std::size_t>(cutoff)] = 1.0;
        return {z, cutoff, std::move(w)};
    }
    const int probe = std::max(cutoff, recommended_cutoff(a)) + 8;
    std::vector<double> seq;
    if (a <= detail::kSeriesThreshold) {
        seq.resize(static_cast<std::size_t>(probe) + 1);
        for (int n = 0; n <= probe; ++n) seq[static_cast<std::size_t>(n)] = detail::j_series(n, a);
    } else {
        seq = detail::miller_sequence(a, probe);
    }
    double tail = 0.0;
    for (std::size_t n = static_cast<std::size_t>(cutoff) + 1; n < seq.size(); ++n) tail += 2.0 * seq[n] * seq[n];
    if (tail > kJacobiAngerTailTolerance)
        throw qring::truncation_error("jacobi_anger_weights: cutoff " + std::to_string(cutoff) +
                                      " leaves tail mass " + std::to_string(tail) + " for z = " +
                                      std::to_string(z));
    const double zsign = z < 0.0 ? -1.0 : 1.0;
    for (int alpha = 0; alpha <= cutoff; ++alpha) {
        double v = seq[static_cast<std::size_t>(alpha)];
        if (zsign < 0.0 && (alpha & 1)) v = -v;
        w[static_cast<std::size_t>(cutoff + alpha)] = v;
        w[static_cast<std::size_t>(cutoff - alpha)] = (alpha & 1) ? -v : v;
    }
    return {z, cutoff, std::move(w)};
}

/// J_m(k r0) N_m(k r1) - J_m(k r1) N_m(k r0); its zeros in k are the Dirichlet
/// radial wavenumbers of the annulus r0 < r < r1 for azimuthal order m.
inline double cross_product_det(int m, double k, double r0, double r1) {
    if (!(r0 > 0.0) || !(r1 > r0) || !std::isfinite(r1))
        throw qring::domain_error("cross_product_det: radii must satisfy 0 < r0 < r1");
    if (!(k > 0.0) || !std::isfinite(k)) throw qring::domain_error("cross_product_det: k must be positive");
    const auto inner = cylinder_functions(m, k * r0);
    const auto outer = cylinder_functions(m, k * r1);
    return inner.j_m * outer.n_m - outer.j_m * inner.n_m;
}

} // namespace qring::specfun

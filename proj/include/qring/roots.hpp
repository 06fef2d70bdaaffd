#pragma once

// Root bracketing by uniform sampling plus refinement of each sign change.

#include "qring/errors.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

namespace qring::roots {

struct BracketScanOptions {
    double step = 0.25;
    /// Subdivisions used to look inside |f| local minima that show no sign change.
    int dip_subdivisions = 32;
    /// Absolute tolerance on the root location.
    double x_tolerance = 1e-12;
};

/// Refines a sign change of f on [a, b] with TOMS 748 (Alefeld-Potra-Shi).
template <class F>
double refine_root(F&& f, double a, double b, double fa, double fb, double x_tolerance) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    std::uintmax_t max_iter = 200;
    auto tol = [x_tolerance](double lo, double hi) {
        return std::abs(hi - lo) <= std::max(x_tolerance, 4e-16 * std::abs(hi));
    };
    auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, max_iter);
    return 0.5 * (lo + hi);
}

/// All sign changes of f on [lo, hi], each refined to x_tolerance. Samples
/// where f is not finite are skipped. Local minima of |f| without a sign change
/// are resampled finely to catch closely spaced root pairs.
template <class F>
std::vector<double> find_sign_changes(F&& f, double lo, double hi, const BracketScanOptions& opts) {
    if (!(hi > lo)) return {};
    if (!(opts.step > 0.0)) throw qring::parameter_error("find_sign_changes: step must be positive");
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / opts.step));
    std::vector<double> xs(n + 1);
    std::vector<double> fs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        xs[i] = (i == n) ? hi : lo + static_cast<double>(i) * opts.step;
        fs[i] = f(xs[i]);
    }

    std::vector<double> found;
    auto scan_interval = [&](double a, double b, double fa, double fb) {
        if (!std::isfinite(fa) || !std::isfinite(fb)) return;
        if (fa == 0.0) {
            found.push_back(a);
            return;
        }
        if ((fa < 0.0) != (fb < 0.0)) found.push_back(refine_root(f, a, b, fa, fb, opts.x_tolerance));
    };

    for (std::size_t i = 0; i < n; ++i) {
        const bool dip = i > 0 && std::isfinite(fs[i - 1]) && std::isfinite(fs[i]) && std::isfinite(fs[i + 1]) &&
                         std::abs(fs[i]) < std::abs(fs[i - 1]) && std::abs(fs[i]) < std::abs(fs[i + 1]) &&
                         (fs[i - 1] < 0.0) == (fs[i] < 0.0) && (fs[i] < 0.0) == (fs[i + 1] < 0.0);
        if (dip) {
            // Replace the coarse cell pair [i-1, i+1]; cell i-1 was already scanned
            // without a sign change, so only new sign changes are recorded.
            const double a = xs[i - 1];
            const double b = xs[i + 1];
            const int sub = opts.dip_subdivisions;
            double pa = fs[i - 1];
            double xa = a;
            for (int s = 1; s <= sub; ++s) {
                const double xb = (s == sub) ? b : a + (b - a) * s / sub;
                const double pb = (s == sub) ? fs[i + 1] : f(xb);
                scan_interval(xa, xb, pa, pb);
                xa = xb;
                pa = pb;
            }
            ++i;  // cell i handled by the fine pass
            continue;
        }
        scan_interval(xs[i], xs[i + 1], fs[i], fs[i + 1]);
    }
    return found;
}

} // namespace qring::roots

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "maxstable/errors.hpp"

namespace maxstable::optimize {

struct ScalarMinimum {
    double x = 0.0;
    double value = 0.0;
    std::size_t evaluations = 0;
};

/// Golden-section search for a minimum of f on [lo, hi], stopping once the
/// bracket is narrower than `tol`.
template <class F>
ScalarMinimum golden_section(F&& f, double lo, double hi, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    ScalarMinimum r;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    r.evaluations = 2;
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++r.evaluations;
    }
    if (fc <= fd) {
        r.x = c;
        r.value = fc;
    } else {
        r.x = d;
        r.value = fd;
    }
    return r;
}

/// Point i (0-based) of the Halton sequence in `dim` <= 8 dimensions, using
/// the first primes as bases and skipping the origin.
inline std::vector<double> halton(std::size_t i, std::size_t dim) {
    static constexpr std::array<unsigned, 8> primes{2, 3, 5, 7, 11, 13, 17, 19};
    if (dim > primes.size()) throw DomainError("halton: at most 8 dimensions");
    std::vector<double> u(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        const double base = primes[k];
        double f = 1.0, v = 0.0;
        for (std::size_t n = i + 1; n > 0; n /= primes[k]) {
            f /= base;
            v += f * static_cast<double>(n % primes[k]);
        }
        u[k] = v;
    }
    return u;
}

struct SimplexOptions {
    double initial_step = 0.5;
    double diameter_tol = 1e-8;
    std::size_t max_evaluations = 2000;
};

struct SimplexMinimum {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Nelder-Mead with the standard coefficients (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Stops when every vertex lies within
/// `diameter_tol` of the best one or the evaluation budget is spent.
template <class F>
SimplexMinimum nelder_mead(F&& f, std::vector<double> x0, const SimplexOptions& opt = {}) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opt.initial_step;
    std::vector<double> vals(n + 1);
    std::size_t evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        if (!std::isfinite(v)) throw NumericalError("nelder_mead: non-finite objective");
        return v;
    };
    for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

    std::vector<std::size_t> order(n + 1);
    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double e = pts[order[i]][k] - pts[order[0]][k];
                s += e * e;
            }
            d = std::max(d, std::sqrt(s));
        }
        return d;
    };
    auto along = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = c[k] + t * (w[k] - c[k]);
        return p;
    };

    SimplexMinimum r;
    for (;;) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        if (diameter() < opt.diameter_tol) {
            r.converged = true;
            break;
        }
        if (evals >= opt.max_evaluations) break;

        const std::size_t worst = order[n], second = order[n - 1], best = order[0];
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[order[i]][k] / static_cast<double>(n);

        const auto xr = along(centroid, pts[worst], -1.0);
        const double fr = eval(xr);
        if (fr < vals[best]) {
            const auto xe = along(centroid, pts[worst], -2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const auto xc = outside ? along(centroid, pts[worst], -0.5) : along(centroid, pts[worst], 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 1; i <= n; ++i) {
            pts[order[i]] = along(pts[best], pts[order[i]], 0.5);
            vals[order[i]] = eval(pts[order[i]]);
        }
    }
    r.x = pts[order[0]];
    r.value = vals[order[0]];
    r.evaluations = evals;
    return r;
}

}  // namespace maxstable::optimize

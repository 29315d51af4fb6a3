#pragma once

// Independent reference computations used only by the tests. None of these
// go through the library's symbolic or geometric code paths.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace eyring::testing {

/// Central finite difference of a scalar function along coordinate i.
inline double central_difference(const std::function<double(std::vector<double>)>& fn,
                                 std::vector<double> x, std::size_t i, double step) {
    std::vector<double> xp = x;
    std::vector<double> xm = x;
    xp[i] += step;
    xm[i] -= step;
    return (fn(xp) - fn(xm)) / (2.0 * step);
}

/// Exact mean exit time of dX = −X dt + √h dB from (a, b) started at x,
/// i.e. the solution of (h/2)u'' − x u' = −1, u(a) = u(b) = 0, written with
/// integrating factors:
///   u'(y) = e^{y²/h} (C − (2/h) F(y)),  F(y) = ∫_a^y e^{−s²/h} ds,
/// with C fixed by u(b) = 0. F is closed form (erf); the outer integrals use
/// adaptive Gauss–Kronrod quadrature.
inline double ou_interval_mean_exit_time(double h, double a, double b, double x) {
    using boost::math::quadrature::gauss_kronrod;
    const double sh = std::sqrt(h);
    const double pref = 0.5 * std::sqrt(std::numbers::pi * h);
    auto F = [&](double y) { return pref * (std::erf(y / sh) - std::erf(a / sh)); };
    auto w = [&](double y) { return std::exp(y * y / h); };
    auto integrate = [](auto fn, double lo, double hi) {
        double err = 0.0;
        return gauss_kronrod<double, 61>::integrate(fn, lo, hi, 15, 1e-12, &err);
    };
    // Split at 0 where the weight is smallest so both halves are monotone.
    auto split = [&](auto fn, double lo, double hi) {
        if (lo < 0.0 && hi > 0.0) return integrate(fn, lo, 0.0) + integrate(fn, 0.0, hi);
        return integrate(fn, lo, hi);
    };
    const double num = split([&](double y) { return w(y) * F(y); }, a, b);
    const double den = split(w, a, b);
    const double c = (2.0 / h) * num / den;
    return split([&](double y) { return w(y) * (c - (2.0 / h) * F(y)); }, a, x);
}

/// Second arc-length derivative of f along a circle of centre c and radius R
/// at the point z on it, for f = ½|x|²: |γ'|² + ∇f(z)·γ'' with |γ'| = 1 and
/// γ'' = −(z − c)/R².
inline double circle_arc_second_derivative_half_norm_sq(const std::vector<double>& c, double r,
                                                        const std::vector<double>& z) {
    double dot = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) dot += z[i] * (-(z[i] - c[i]) / (r * r));
    return 1.0 + dot;
}

/// Second arc-length derivative of f = ½|x|² on the ellipse (A cos θ, B sin θ)
/// at a critical angle θ: f_θθ / |γ_θ|².
inline double ellipse_arc_second_derivative_half_norm_sq(double A, double B, double theta) {
    const double f_tt = (B * B - A * A) * std::cos(2.0 * theta);
    const double speed_sq = A * A * std::sin(theta) * std::sin(theta) +
                            B * B * std::cos(theta) * std::cos(theta);
    return f_tt / speed_sq;
}

}  // namespace eyring::testing

namespace eyring::testing {

/// Classical fixed-step RK4 for ∫_0^T div(ψ_t) dt along ψ' = v(ψ), with the
/// integral carried as an extra coordinate. Deliberately simple: it shares
/// no code with the adaptive integrator under test.
inline double rk4_divergence_integral(const std::function<std::vector<double>(const std::vector<double>&)>& v,
                                      const std::function<double(const std::vector<double>&)>& div,
                                      std::vector<double> x, double t_end, double dt) {
    const std::size_t d = x.size();
    auto rhs = [&](const std::vector<double>& y) {
        std::vector<double> p(y.begin(), y.begin() + static_cast<long>(d));
        std::vector<double> out = v(p);
        out.push_back(div(p));
        return out;
    };
    std::vector<double> y = x;
    y.push_back(0.0);
    const auto steps = static_cast<long>(std::ceil(t_end / dt));
    const double h = t_end / static_cast<double>(steps);
    auto axpy = [](const std::vector<double>& a, double s, const std::vector<double>& b) {
        std::vector<double> r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
        return r;
    };
    for (long k = 0; k < steps; ++k) {
        const auto k1 = rhs(y);
        const auto k2 = rhs(axpy(y, h / 2, k1));
        const auto k3 = rhs(axpy(y, h / 2, k2));
        const auto k4 = rhs(axpy(y, h, k3));
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return y.back();
}

}  // namespace eyring::testing

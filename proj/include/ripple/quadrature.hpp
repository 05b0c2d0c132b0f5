// quadrature.hpp — adaptive Gauss–Kronrod (7/15) with an absolute error target

#pragma once

#include <cmath>
#include <complex>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace ripple::quad {

struct Options {
    double abs_tol{1e-12};
    unsigned max_depth{30};
};

namespace detail {

template <class F>
auto kronrod15(F& f, double a, double b) {
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    const auto& xk = gauss_kronrod<double, 15>::abscissa();
    const auto& wk = gauss_kronrod<double, 15>::weights();
    const auto& wg = gauss<double, 7>::weights();

    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    using T = decltype(f(c));
    const T fc = f(c);
    T kron = wk[0] * fc;
    T gaus = wg[0] * fc;
    // Kronrod abscissae interleave: even slots are the Gauss points
    for (std::size_t i = 1; i < xk.size(); ++i) {
        const T sum = f(c - h * xk[i]) + f(c + h * xk[i]);
        kron += wk[i] * sum;
        if (i % 2 == 0) gaus += wg[i / 2] * sum;
    }
    return std::pair<T, double>{kron * h, std::abs(kron * h - gaus * h)};
}

template <class F>
auto adapt(F& f, double a, double b, double tol, unsigned depth, double& err) {
    auto [value, e] = kronrod15(f, a, b);
    if (e <= tol || depth == 0) {
        err += e;
        return value;
    }
    const double mid = 0.5 * (a + b);
    return adapt(f, a, mid, 0.5 * tol, depth - 1, err) +
           adapt(f, mid, b, 0.5 * tol, depth - 1, err);
}

}  // namespace detail

/// Integral of f over [a, b]; f may return double or std::complex<double>.
/// `error` receives the summed Kronrod–Gauss difference estimate.
template <class F>
auto integrate(F f, double a, double b, Options opt = {}, double* error = nullptr) {
    double err = 0.0;
    auto v = detail::adapt(f, a, b, opt.abs_tol, opt.max_depth, err);
    if (error) *error = err;
    return v;
}

/// Iterated integral over the rectangle [x0, x1] x [y0, y1] of f(x, y).
template <class F>
auto integrate_2d(F f, double x0, double x1, double y0, double y1, Options opt = {},
                  double* error = nullptr) {
    Options inner = opt;
    inner.abs_tol = opt.abs_tol / (4.0 * std::max(1.0, x1 - x0));
    double inner_err_max = 0.0;
    auto outer = [&](double x) {
        double e = 0.0;
        auto v = integrate([&](double y) { return f(x, y); }, y0, y1, inner, &e);
        inner_err_max = std::max(inner_err_max, e);
        return v;
    };
    Options half = opt;
    half.abs_tol = 0.5 * opt.abs_tol;
    double e_outer = 0.0;
    auto v = integrate(outer, x0, x1, half, &e_outer);
    if (error) *error = e_outer + inner_err_max * (x1 - x0);
    return v;
}

}  // namespace ripple::quad

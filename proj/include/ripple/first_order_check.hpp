// first_order_check.hpp — cross-check of the closed-form ripple matrix
// elements against direct 2D quadrature of the first-order operator
//
//   U = (eps/2) (2 cos x d2/dy2 - 2 y sin x d2/dxdy - y cos x d/dy
//                - (1/2) cos x - sin x d/dx),   eps = a/d,
//
// applied to e^{i(n+k)x} sin(pi m y/d) and projected on one unit cell.

#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "ripple/model.hpp"
#include "ripple/quadrature.hpp"

namespace ripple {

/// <bra|U|ket> by adaptive quadrature over x in [0, 2 pi], y in [0, d].
inline std::complex<double> ripple_matrix_element_quadrature(BasisIndex ket, BasisIndex bra,
                                                             double k, double a, double d,
                                                             double abs_tol = 1e-12) {
    const double eps = a / d;
    const double kappa = k + ket.n;
    const double kappa_p = k + bra.n;
    const double beta = pi * ket.m / d;
    const double beta_p = pi * bra.m / d;
    const double norm = 1.0 / (pi * d);  // |sqrt(2/(L d))|^2 with L = 2 pi
    const std::complex<double> I{0.0, 1.0};

    auto integrand = [&](double x, double y) {
        const std::complex<double> phase = std::exp(I * (kappa - kappa_p) * x);
        const double s = std::sin(beta * y);
        const double c = std::cos(beta * y);
        const double cx = std::cos(x);
        const double sx = std::sin(x);
        // U psi / e^{i kappa x}
        const std::complex<double> u_psi =
            0.5 * eps *
            (2.0 * cx * (-beta * beta * s) - 2.0 * y * sx * (I * kappa * beta * c) -
             y * cx * (beta * c) - 0.5 * cx * s - sx * (I * kappa * s));
        return norm * phase * std::sin(beta_p * y) * u_psi;
    };
    quad::Options opt;
    opt.abs_tol = abs_tol;
    return quad::integrate_2d(integrand, 0.0, 2.0 * pi, 0.0, d, opt);
}

struct MatrixElementSample {
    BasisIndex ket;
    BasisIndex bra;
    double closed_form{0.0};
    std::complex<double> quadrature;
    double error{0.0};  // relative to max(|closed_form|, a/(2d))
};

struct FirstOrderCheck {
    double max_error{0.0};
    std::vector<MatrixElementSample> samples;
};

/// Compares ripple_matrix_element with quadrature on `sample_count` random
/// index pairs with |n|, m <= max_index. Most draws use n' = n +- 1; the rest
/// probe the selection rule with n' in {n, n +- 2}.
inline FirstOrderCheck validate_first_order_hamiltonian(const ModelParams& params,
                                                        int sample_count,
                                                        std::uint64_t seed = 20240501,
                                                        int max_index = 20) {
    if (sample_count < 0) throw DomainError("sample_count must be non-negative");
    if (params.a != 0.0 && !(params.epsilon() < 0.1))
        throw DomainError("first-order operator needs a/d < 0.1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_dist(-max_index, max_index);
    std::uniform_int_distribution<int> m_dist(1, max_index);
    std::uniform_int_distribution<int> shift_dist(0, 9);
    static constexpr int kShifts[10] = {1, -1, 1, -1, 1, -1, 1, -1, 0, 2};

    const double scale = params.a / (2.0 * params.d);
    FirstOrderCheck out;
    out.samples.reserve(static_cast<std::size_t>(sample_count));
    for (int i = 0; i < sample_count; ++i) {
        MatrixElementSample s;
        s.ket = {n_dist(rng), m_dist(rng)};
        const int shift = kShifts[shift_dist(rng)];
        s.bra = {s.ket.n + (shift == 2 && (rng() & 1u) ? -2 : shift), m_dist(rng)};
        s.closed_form = ripple_matrix_element(s.ket, s.bra, params.k, params.a, params.d);
        s.quadrature = ripple_matrix_element_quadrature(s.ket, s.bra, params.k, params.a, params.d);
        const double diff = std::abs(s.quadrature - s.closed_form);
        const double ref = std::max(std::abs(s.closed_form), scale);
        s.error = diff == 0.0 ? 0.0 : diff / ref;
        out.max_error = std::max(out.max_error, s.error);
        out.samples.push_back(s);
    }
    return out;
}

}  // namespace ripple

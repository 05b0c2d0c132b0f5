// model.hpp — rippled waveguide model: parameters, basis indexing, matrix
// elements of the first-order ripple operator and of the transverse
// coordinate, and assembly of the resonance-reduced Hamiltonian.
//
// Units: hbar = m = 1. The upper wall is y = d + a cos x, the lower wall y = 0.
// Unperturbed states are e^{i(n+k)x} sin(pi m y / d) with Bloch number k.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ripple/errors.hpp"

namespace ripple {

inline constexpr double pi = std::numbers::pi;

struct DrivingField {
    double f0{10.0};                   // amplitude of V(y,t) = -f0 y (cos W1 t + cos W2 t)
    double omega1{350.0};
    double omega2{450.0};
    double period{7.0 * 2.0 * pi / 350.0};

    /// f(t) such that V(y,t) = f(t) * y.
    double coupling(double t) const {
        return -f0 * (std::cos(omega1 * t) + std::cos(omega2 * t));
    }
    /// Integral of coupling() from 0 to t.
    double coupling_integral(double t) const {
        return -f0 * (std::sin(omega1 * t) / omega1 + std::sin(omega2 * t) / omega2);
    }
    /// Classical force along y, -dV/dy.
    double force(double t) const { return -coupling(t); }
};

/// Number of drive cycles of frequency `omega` that fit into `period`, or -1
/// if the ratio is not an integer to relative 1e-9.
inline long cycles_per_period(double omega, double period) {
    const double c = omega * period / (2.0 * pi);
    const double r = std::round(c);
    if (r < 1.0 || std::abs(c - r) > 1e-9 * std::max(1.0, r)) return -1;
    return static_cast<long>(r);
}

struct ModelParams {
    double d{pi};
    double a{0.01};
    double k{0.1};
    int n0{400};
    int m0{400};
    double f0{10.0};
    double omega1{350.0};
    double omega2{450.0};
    double period{7.0 * 2.0 * pi / 350.0};

    double epsilon() const { return a / d; }
    /// E_{n0+1} - E_{n0} at Bloch number k.
    double omega_n0() const { return k + n0 + 0.5; }
    /// E_{m0+1} - E_{m0} for the transverse ladder.
    double omega_m0() const { return pi * pi * (2.0 * m0 + 1.0) / (2.0 * d * d); }

    DrivingField driving() const { return {f0, omega1, omega2, period}; }
};

/// Checks the physical invariants of a parameter set. Throws ConfigError naming
/// the offending key. `detuning_tolerance` is relative to omega_n0.
inline void validate(const ModelParams& p, double detuning_tolerance = 0.01) {
    if (!(p.d > 0.0)) throw ConfigError("d", "d must be positive");
    if (!(p.a > 0.0 && p.a < p.d)) throw ConfigError("a", "ripple amplitude must satisfy 0 < a < d");
    if (!(p.epsilon() < 0.1))
        throw ConfigError("a", "a/d must stay below 0.1 for the first-order ripple operator");
    if (!(p.k > -0.5 && p.k < 0.5))
        throw ConfigError("k", "Bloch number must lie strictly inside (-1/2, 1/2)");
    if (p.k == 0.0)
        throw ConfigError("k", "k = 0 is a symmetry point where the +n0 and -n0 branches couple");
    if (p.m0 < 1) throw ConfigError("m0", "m0 must be >= 1");
    if (!(p.f0 >= 0.0)) throw ConfigError("f0", "f0 must be non-negative");
    if (!(p.omega1 > 0.0 && p.omega2 > 0.0))
        throw ConfigError("omega1", "driving frequencies must be positive");
    if (!(p.period > 0.0)) throw ConfigError("period", "period must be positive");
    if (cycles_per_period(p.omega1, p.period) < 0)
        throw ConfigError("period", "period * omega1 / (2 pi) is not an integer");
    if (cycles_per_period(p.omega2, p.period) < 0)
        throw ConfigError("period", "period * omega2 / (2 pi) is not an integer");
    const double mean = 0.5 * (p.omega1 + p.omega2);
    if (std::abs(mean - p.omega_n0()) > detuning_tolerance * p.omega_n0())
        throw ConfigError("omega1", "(omega1 + omega2)/2 = " + std::to_string(mean) +
                                        " is detuned from omega_n0 = " +
                                        std::to_string(p.omega_n0()));
}

struct BasisIndex {
    int n{0};  // longitudinal harmonic
    int m{1};  // transverse mode, >= 1
    friend bool operator==(const BasisIndex&, const BasisIndex&) = default;
};

/// r = n - n0, p = r + (m - m0).
struct ResonanceIndex {
    int r{0};
    int p{0};
    friend bool operator==(const ResonanceIndex&, const ResonanceIndex&) = default;
};

inline BasisIndex to_basis(ResonanceIndex i, int n0, int m0) {
    const BasisIndex b{n0 + i.r, m0 + i.p - i.r};
    if (b.m < 1)
        throw DomainError("resonance index (r=" + std::to_string(i.r) + ", p=" +
                          std::to_string(i.p) + ") maps to transverse mode m=" +
                          std::to_string(b.m) + " < 1");
    return b;
}

inline ResonanceIndex to_resonance(BasisIndex b, int n0, int m0) {
    const int r = b.n - n0;
    return {r, r + (b.m - m0)};
}

inline double unperturbed_energy(int n, int m, double k, double d) {
    if (m < 1) throw DomainError("transverse mode m must be >= 1, got " + std::to_string(m));
    const double kx = n + k;
    const double ky = pi * m / d;
    return 0.5 * (kx * kx + ky * ky);
}

/// <bra| U |ket> of the first-order ripple operator between unperturbed Bloch
/// states (n + k, m). Nonzero only for bra.n = ket.n +- 1. The m == m' and
/// m != m' terms are mutually exclusive.
inline double ripple_matrix_element(BasisIndex ket, BasisIndex bra, double k, double a, double d) {
    if (ket.m < 1 || bra.m < 1) throw DomainError("transverse modes must be >= 1");
    const bool up = bra.n == ket.n + 1;
    const bool down = bra.n == ket.n - 1;
    if (!up && !down) return 0.0;
    const double pref = -a / (2.0 * d);
    const double m = ket.m;
    if (ket.m == bra.m) return pref * pi * pi * m * m / (d * d);
    const double mp = bra.m;
    const double sign = ((ket.m + bra.m) % 2 == 0) ? 1.0 : -1.0;
    const double kappa = k + ket.n;
    const double factor = up ? (1.0 + 2.0 * kappa) : (1.0 - 2.0 * kappa);
    return pref * sign * m * mp / (m * m - mp * mp) * factor;
}

/// (2/d) * integral_0^d y sin(pi m y/d) sin(pi m' y/d) dy.
inline double y_matrix_element(int m, int mp, double d) {
    if (m < 1 || mp < 1) throw DomainError("transverse modes must be >= 1");
    if (m == mp) return 0.5 * d;
    if ((m + mp) % 2 == 0) return 0.0;
    const double dm = static_cast<double>(m) * m - static_cast<double>(mp) * mp;
    return -8.0 * d * m * mp / (pi * pi * dm * dm);
}

struct ResonanceLocation {
    int n0{0};
    int m0{0};
    double detuning{0.0};  // omega_n0 - omega_m0
};

/// Finds the coupling resonance omega_n0 = omega_m0 next to `omega_target`.
/// Candidates must have both ladder frequencies within 1% of the target. The
/// pair with the smallest |detuning| wins; ties go to the pair whose n0 and m0
/// sit closest to the semiclassical estimates n0 ~ target, m0 ~ target d^2/pi^2.
inline ResonanceLocation locate_resonance(double omega_target, double d, double k) {
    if (!(omega_target > 0.0)) throw DomainError("omega_target must be positive");
    constexpr double window = 0.01;
    const double lo = (1.0 - window) * omega_target;
    const double hi = (1.0 + window) * omega_target;
    const double c = pi * pi / (2.0 * d * d);

    // omega_n0 = k + n0 + 1/2, omega_m0 = c (2 m0 + 1)
    const long n_lo = static_cast<long>(std::ceil(lo - k - 0.5));
    const long n_hi = static_cast<long>(std::floor(hi - k - 0.5));
    const long m_lo = std::max(0L, static_cast<long>(std::ceil((lo / c - 1.0) / 2.0)));
    const long m_hi = static_cast<long>(std::floor((hi / c - 1.0) / 2.0));

    const double n_est = omega_target;
    const double m_est = omega_target * d * d / (pi * pi);
    bool found = false;
    ResonanceLocation best;
    double best_abs = std::numeric_limits<double>::infinity();
    double best_tie = std::numeric_limits<double>::infinity();
    for (long n = n_lo; n <= n_hi; ++n) {
        const double wn = k + n + 0.5;
        if (wn < lo || wn > hi) continue;
        for (long m = m_lo; m <= m_hi; ++m) {
            const double wm = c * (2.0 * m + 1.0);
            if (wm < lo || wm > hi) continue;
            const double det = wn - wm;
            const double tie = std::abs(n - n_est) + std::abs(m - m_est);
            constexpr double eps = 1e-12;
            if (std::abs(det) < best_abs - eps ||
                (std::abs(det) <= best_abs + eps && tie < best_tie)) {
                best = {static_cast<int>(n), static_cast<int>(m), det};
                best_abs = std::abs(det);
                best_tie = tie;
                found = true;
            }
        }
    }
    if (!found)
        throw PhysicsError("no coupling resonance with both frequencies within 1% of " +
                           std::to_string(omega_target));
    return best;
}

struct Truncation {
    int r_max{8};
    int p_min{-16};
    int p_max{16};
};

/// Real symmetric matrix of the resonance-reduced system over a rectangular
/// window of (r, p). Basis order is r-major: all p for r = -r_max, then the
/// next r, so the driving operator (diagonal in r) is block diagonal.
/// Energies are counted from E0(n0, m0).
class ResonanceBlock {
public:
    ResonanceBlock(Eigen::MatrixXd matrix, std::vector<ResonanceIndex> index_map,
                   ModelParams params, Truncation truncation)
        : matrix_(std::move(matrix)),
          index_map_(std::move(index_map)),
          params_(params),
          truncation_(truncation) {}

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const std::vector<ResonanceIndex>& index_map() const { return index_map_; }
    const ModelParams& params() const { return params_; }
    const Truncation& truncation() const { return truncation_; }
    std::size_t dim() const { return index_map_.size(); }
    int p_count() const { return truncation_.p_max - truncation_.p_min + 1; }

    /// Row of (r, p), or -1 when outside the window.
    long position(ResonanceIndex i) const {
        if (std::abs(i.r) > truncation_.r_max || i.p < truncation_.p_min || i.p > truncation_.p_max)
            return -1;
        return static_cast<long>(i.r + truncation_.r_max) * p_count() + (i.p - truncation_.p_min);
    }

private:
    Eigen::MatrixXd matrix_;
    std::vector<ResonanceIndex> index_map_;
    ModelParams params_;
    Truncation truncation_;
};

inline double resonance_diagonal(const ModelParams& params, ResonanceIndex i) {
    const double pr = i.p - i.r;
    return i.p * params.omega_m0() +
           0.5 * (i.r * i.r + pi * pi * pr * pr / (params.d * params.d));
}

inline std::vector<ResonanceIndex> make_index_map(const Truncation& t) {
    std::vector<ResonanceIndex> map;
    map.reserve(static_cast<std::size_t>(2 * t.r_max + 1) * (t.p_max - t.p_min + 1));
    for (int r = -t.r_max; r <= t.r_max; ++r)
        for (int p = t.p_min; p <= t.p_max; ++p) map.push_back({r, p});
    return map;
}

inline ResonanceBlock build_resonance_block(const ModelParams& params, const Truncation& t) {
    if (t.r_max < 1) throw DomainError("truncation needs r_max >= 1");
    if (t.p_max < t.p_min) throw DomainError("truncation needs p_min <= p_max");
    // smallest m occurs at p = p_min, r = r_max
    if (params.m0 + t.p_min - t.r_max < 1)
        throw DomainError("truncation reaches transverse mode m = " +
                          std::to_string(params.m0 + t.p_min - t.r_max) + " < 1");

    auto map = make_index_map(t);
    const auto dim = static_cast<Eigen::Index>(map.size());
    const int np = t.p_max - t.p_min + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const ResonanceIndex ri = map[static_cast<std::size_t>(i)];
        h(i, i) = resonance_diagonal(params, ri);
        const BasisIndex ket = to_basis(ri, params.n0, params.m0);
        for (int dr : {-1, 1}) {
            const int r2 = ri.r + dr;
            if (std::abs(r2) > t.r_max) continue;
            const Eigen::Index base = static_cast<Eigen::Index>(r2 + t.r_max) * np;
            for (int p2 = t.p_min; p2 <= t.p_max; ++p2) {
                const BasisIndex bra = to_basis({r2, p2}, params.n0, params.m0);
                h(base + (p2 - t.p_min), i) =
                    ripple_matrix_element(ket, bra, params.k, params.a, params.d);
            }
        }
    }
    return ResonanceBlock(std::move(h), std::move(map), params, t);
}

/// max |H_ij - conj(H_ji)|.
inline double hermiticity_norm(const Eigen::MatrixXd& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace ripple

// floquet.hpp — one-period evolution operator under the two-frequency field,
// wave-packet evolution in (q, s), diffusion fits, localization and
// quasienergy analysis.
//
// The driving V(y,t) = f(t) y is diagonal in r, so in the r-major ordering the
// transverse-coordinate operator Y is block diagonal. The propagator is built in
// the eigenbasis of Y, where each kick exp(-i f(t) dt Y) is a phase, while the
// static part H0 is applied exactly through its own eigendecomposition.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ripple/errors.hpp"
#include "ripple/fit.hpp"
#include "ripple/linalg.hpp"
#include "ripple/model.hpp"
#include "ripple/spectrum.hpp"

namespace ripple {

/// Y_{ij} = <i| y |j> over the (r, p) rows: y_matrix_element at equal r.
inline Eigen::MatrixXd y_operator(const std::vector<ResonanceIndex>& index_map, int n0, int m0, double d) {
    const auto dim = static_cast<Eigen::Index>(index_map.size());
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const auto ri = index_map[static_cast<std::size_t>(i)];
        const int mi = to_basis(ri, n0, m0).m;
        for (Eigen::Index j = 0; j < dim; ++j) {
            const auto rj = index_map[static_cast<std::size_t>(j)];
            if (rj.r != ri.r) continue;
            y(i, j) = y_matrix_element(mi, to_basis(rj, n0, m0).m, d);
        }
    }
    return y;
}

inline Eigen::MatrixXd y_operator(const ResonanceBlock& block) {
    return y_operator(block.index_map(), block.params().n0, block.params().m0, block.params().d);
}

/// V(t) = -f0 (cos W1 t + cos W2 t) Y.
inline Eigen::MatrixXd driving_matrix(double t, const DrivingField& field,
                                      const std::vector<ResonanceIndex>& index_map, int n0, int m0,
                                      double d) {
    return field.coupling(t) * y_operator(index_map, n0, m0, d);
}

enum class SplittingScheme { strang, yoshida4 };

struct PropagatorOptions {
    SplittingScheme scheme{SplittingScheme::yoshida4};
    bool half_period{true};          // U(T) = W^T W with W = U(T/2); needs a time-symmetric drive
    double unitarity_tol{1e-8};
    int min_steps_per_cycle{24};     // resolution contract: steps >= this * (W2 T / 2 pi)
};

struct PropagatorMatrix {
    Eigen::MatrixXcd U;              // over the (r, p) rows
    int step_count{0};
    double unitarity_defect{0.0};
};

inline int required_steps(const DrivingField& field, const PropagatorOptions& opt = {}) {
    const double cycles =
        std::max(field.omega1, field.omega2) * field.period / (2.0 * pi);
    return static_cast<int>(std::ceil(opt.min_steps_per_cycle * cycles - 1e-9));
}

namespace detail {

struct YBasis {
    Eigen::VectorXd mu;  // eigenvalues of Y
    Eigen::MatrixXd w;   // block-diagonal orthogonal eigenvectors
};

/// Diagonalizes Y block by block (one block per r).
inline YBasis y_eigenbasis(const ResonanceBlock& block) {
    const Eigen::MatrixXd y = y_operator(block);
    const auto dim = static_cast<Eigen::Index>(block.dim());
    const Eigen::Index np = block.p_count();
    YBasis out{Eigen::VectorXd(dim), Eigen::MatrixXd::Zero(dim, dim)};
    for (Eigen::Index b = 0; b < dim; b += np) {
        auto e = linalg::symmetric_eigen(y.block(b, b, np, np));
        out.mu.segment(b, np) = e.values;
        out.w.block(b, b, np, np) = e.vectors;
    }
    return out;
}

}  // namespace detail

/// U(T) of i dC/dt = (H0 + f(t) Y) C. Fixed step T/steps, symplectic splitting
/// between the exact H0 flow and the exact frozen-time kick. With f0 = 0 the
/// result is exp(-i H0 T) to rounding.
inline PropagatorMatrix one_period_propagator(const ResonanceBlock& block, const DrivingField& field,
                                              int steps, const PropagatorOptions& opt = {}) {
    if (steps < 1) throw DomainError("one_period_propagator: steps must be positive");
    if (field.f0 != 0.0 && steps < required_steps(field, opt))
        throw DomainError("one_period_propagator: " + std::to_string(steps) +
                          " steps do not resolve the drive (need >= " +
                          std::to_string(required_steps(field, opt)) + ")");
    if (opt.half_period && steps % 2 != 0)
        throw DomainError("one_period_propagator: half-period symmetry needs an even step count");
    if (opt.half_period && (cycles_per_period(field.omega1, field.period) < 0 ||
                            cycles_per_period(field.omega2, field.period) < 0))
        throw DomainError("one_period_propagator: half-period symmetry needs a commensurate drive");

    using cd = std::complex<double>;
    const auto h0 = linalg::symmetric_eigen(block.matrix());
    const auto yb = detail::y_eigenbasis(block);
    const Eigen::MatrixXcd m = (h0.vectors.transpose() * yb.w).cast<cd>();  // H0-eig <- Y-eig
    const Eigen::Index dim = m.rows();
    const double dt = field.period / steps;

    // exact H0 flow over time h, expressed in the Y eigenbasis
    auto drift = [&](double h) -> Eigen::MatrixXcd {
        Eigen::VectorXcd ph(dim);
        for (Eigen::Index i = 0; i < dim; ++i) ph(i) = std::polar(1.0, -h0.values(i) * h);
        Eigen::MatrixXcd tmp = ph.asDiagonal() * m;
        return m.transpose() * tmp;
    };
    auto kick = [&](Eigen::MatrixXcd& u, double t, double h) {
        const double f = field.coupling(t) * h;
        for (Eigen::Index i = 0; i < dim; ++i) u.row(i) *= std::polar(1.0, -f * yb.mu(i));
    };

    const int n = opt.half_period ? steps / 2 : steps;
    Eigen::MatrixXcd u, tmp;
    if (opt.scheme == SplittingScheme::strang) {
        const Eigen::MatrixXcd half = drift(0.5 * dt);
        const Eigen::MatrixXcd full = drift(dt);
        u = half;
        for (int s = 0; s < n; ++s) {
            kick(u, (s + 0.5) * dt, dt);
            tmp.noalias() = (s + 1 < n ? full : half) * u;
            u.swap(tmp);
        }
    } else {
        const double cbrt2 = std::cbrt(2.0);
        const double x1 = 1.0 / (2.0 - cbrt2);
        const double x0 = -cbrt2 / (2.0 - cbrt2);
        const double c_out = 0.5 * x1, c_in = 0.5 * (x0 + x1);
        const Eigen::MatrixXcd p_out = drift(c_out * dt);
        const Eigen::MatrixXcd p_in = drift(c_in * dt);
        const Eigen::MatrixXcd p_join = drift(2.0 * c_out * dt);  // last drift of a step + first of the next
        u = p_out;
        for (int s = 0; s < n; ++s) {
            double t = s * dt + c_out * dt;
            kick(u, t, x1 * dt);
            tmp.noalias() = p_in * u;
            t += c_in * dt;
            kick(tmp, t, x0 * dt);
            u.noalias() = p_in * tmp;
            t += c_in * dt;
            kick(u, t, x1 * dt);
            tmp.noalias() = (s + 1 < n ? p_join : p_out) * u;
            u.swap(tmp);
        }
    }
    // H0 and Y are real symmetric and f(T - t) = f(t), so U(T, T/2) = U(T/2, 0)^T.
    if (opt.half_period) u = (u.transpose() * u).eval();

    const Eigen::MatrixXcd w = yb.w.cast<cd>();
    tmp.noalias() = w * u;
    PropagatorMatrix out;
    out.U.noalias() = tmp * w.transpose();
    out.step_count = steps;
    out.unitarity_defect = linalg::unitarity_defect(out.U);
    if (!(out.unitarity_defect <= opt.unitarity_tol))
        throw NumericalError("propagator unitarity defect " + std::to_string(out.unitarity_defect) +
                             " exceeds " + std::to_string(opt.unitarity_tol) +
                             "; increase steps_per_period");
    return out;
}

struct QMoments {
    double delta_q{0.0};
    double q_bar{0.0};
};

/// Mean and variance of q under the weights |C_j|^2, with q_of[j] the group of
/// amplitude j.
inline QMoments variance_q(const Eigen::VectorXcd& c, std::span<const int> q_of) {
    if (static_cast<std::size_t>(c.size()) != q_of.size()) throw DomainError("variance_q: size mismatch");
    double norm = 0.0, mean = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const double w = std::norm(c(j));
        norm += w;
        mean += w * q_of[static_cast<std::size_t>(j)];
    }
    if (!(norm > 0.0)) throw DomainError("variance_q: zero state");
    mean /= norm;
    double var = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const double dq = q_of[static_cast<std::size_t>(j)] - mean;
        var += std::norm(c(j)) * dq * dq;
    }
    return {var / norm, mean};
}

struct EvolutionRecord {
    std::vector<int> N;
    std::vector<double> t;
    std::vector<double> delta_q;
    std::vector<double> q_bar;
    std::vector<double> energy_variance;  // omega_n0^2 * delta_q
    std::vector<double> leakage;          // probability on the truncation shell
    std::vector<double> norm;
    std::vector<std::string> warnings;
    std::size_t size() const { return N.size(); }
};

struct EvolutionOptions {
    int periods{500};
    int record_every{1};
    double warn_leakage{0.01};
    double abort_leakage{0.05};
};

/// Applies U repeatedly to psi0 (over the (r, p) rows) and records moments of
/// the (q, s) distribution every record_every periods, starting at N = 0.
inline EvolutionRecord evolve(const Eigen::VectorXcd& psi0, const PropagatorMatrix& prop,
                              const SpectrumGroups& groups, std::span<const char> boundary,
                              double period, const EvolutionOptions& opt) {
    if (opt.periods < 1) throw DomainError("evolve: N must be >= 1");
    if (opt.record_every < 1) throw DomainError("evolve: record_every must be >= 1");
    if (psi0.size() != prop.U.rows()) throw DomainError("evolve: state/propagator dimension mismatch");
    if (!boundary.empty() && boundary.size() != static_cast<std::size_t>(psi0.size()))
        throw DomainError("evolve: boundary mask has the wrong size");

    const double w2 = groups.omega_n0 * groups.omega_n0;
    EvolutionRecord rec;
    bool warned = false;
    Eigen::VectorXcd psi = psi0, next;
    for (int n = 0;; ++n) {
        if (n % opt.record_every == 0) {
            const Eigen::VectorXcd c = project_onto_groups(psi, groups);
            const auto mom = variance_q(c, groups.q_of_column);
            double edge = 0.0;
            for (std::size_t i = 0; i < boundary.size(); ++i)
                if (boundary[i]) edge += std::norm(psi(static_cast<Eigen::Index>(i)));
            rec.N.push_back(n);
            rec.t.push_back(n * period);
            rec.delta_q.push_back(mom.delta_q);
            rec.q_bar.push_back(mom.q_bar);
            rec.energy_variance.push_back(w2 * mom.delta_q);
            rec.leakage.push_back(edge);
            rec.norm.push_back(psi.squaredNorm());
            if (edge > opt.abort_leakage)
                throw PhysicsError("evolve: probability " + std::to_string(edge) +
                                   " on the truncation boundary at N=" + std::to_string(n) +
                                   " exceeds " + std::to_string(opt.abort_leakage));
            if (edge > opt.warn_leakage && !warned) {
                rec.warnings.push_back("truncation overflow: boundary probability " +
                                       std::to_string(edge) + " at N=" + std::to_string(n));
                warned = true;
            }
        }
        if (n == opt.periods) break;
        next.noalias() = prop.U * psi;
        psi.swap(next);
    }
    return rec;
}

struct DiffusionFit {
    double D{0.0};
    double slope_error{0.0};
    double intercept{0.0};
    std::size_t samples{0};
    double significance() const { return slope_error > 0.0 ? D / slope_error : (D != 0.0 ? INFINITY : 0.0); }
    bool consistent_with_zero(double sigmas = 2.0) const { return std::abs(D) <= sigmas * slope_error; }
};

/// Least-squares slope of y against t over t in [t_begin, t_end].
inline DiffusionFit fit_series(std::span<const double> t, std::span<const double> y, double t_begin,
                               double t_end, std::size_t min_samples = 10) {
    if (t.size() != y.size()) throw DomainError("fit: size mismatch");
    std::vector<double> x, v;
    const double tol = 1e-9 * std::max(std::abs(t_begin), std::abs(t_end));
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t_begin - tol && t[i] <= t_end + tol) {
            x.push_back(t[i]);
            v.push_back(y[i]);
        }
    if (x.size() < min_samples)
        throw NumericalError("fit: only " + std::to_string(x.size()) + " samples in window (need " +
                             std::to_string(min_samples) + ")");
    const auto f = fit_line(x, v);
    return {f.slope, f.slope_error, f.intercept, f.samples};
}

/// D_q = d(Var E)/dt over the period window [N_start, N_end].
inline DiffusionFit fit_diffusion(const EvolutionRecord& rec, int n_start, int n_end, double period) {
    if (n_start >= n_end) throw DomainError("fit_diffusion: empty window");
    if (rec.size() == 0 || rec.N.front() > n_start || rec.N.back() < n_end)
        throw DomainError("fit_diffusion: window lies outside the record");
    return fit_series(rec.t, rec.energy_variance, n_start * period, n_end * period);
}

struct LocalizationOptions {
    int min_window{50};     // periods in the leading and trailing windows at least
    double sigmas{2.0};
    int transient{20};      // leading fit starts here, past the initial jump out of the eigenstate
};

struct Localization {
    std::optional<double> t_sat;
    std::optional<int> N_sat;
    double plateau_level{0.0};
    bool diffusive{false};  // a significantly growing phase precedes t_sat
    DiffusionFit leading;
    DiffusionFit trailing;
};

/// Scans candidate break points N_s. The first N_s at which the trailing fit
/// over [N_s, end] is flat (|slope| <= sigmas * error) defines t_sat; the fit
/// over [start + transient, N_s] tells whether a diffusive phase came first. No t_sat if
/// growth persists to the end.
inline Localization detect_localization(const EvolutionRecord& rec, double period,
                                        const LocalizationOptions& opt = {}) {
    if (rec.size() < 2 || rec.N.back() - rec.N.front() < 500)
        throw DomainError("detect_localization: record must span at least 500 periods");
    const int first = rec.N.front() + opt.transient, last = rec.N.back();
    std::span<const double> t(rec.t), y(rec.energy_variance);
    Localization out;
    bool first_candidate = true;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const int ns = rec.N[i];
        if (ns - first < opt.min_window) continue;
        if (last - ns < opt.min_window) break;
        DiffusionFit trailing, leading;
        try {
            trailing = fit_series(t, y, ns * period, last * period, 3);
            leading = fit_series(t, y, first * period, ns * period, 3);
        } catch (const NumericalError&) {
            continue;
        }
        const bool flat = std::abs(trailing.D) <= opt.sigmas * trailing.slope_error;
        const bool grew = leading.D > opt.sigmas * leading.slope_error;
        if (flat && (grew || first_candidate)) {
            out.t_sat = ns * period;
            out.N_sat = ns;
            out.diffusive = grew;
            out.leading = leading;
            out.trailing = trailing;
            double mean = 0.0;
            std::size_t cnt = 0;
            for (std::size_t j = i; j < rec.size(); ++j, ++cnt) mean += y[j];
            out.plateau_level = mean / cnt;
            return out;
        }
        first_candidate = false;
        out.leading = leading;
        out.trailing = trailing;
    }
    return out;
}

struct QuasiEnergyState {
    double epsilon{0.0};     // in [0, 2 pi / T)
    double q_variance{0.0};
    double q_bar{0.0};
    double modulus{1.0};
};

struct QuasiEnergyAnalysis {
    std::vector<QuasiEnergyState> states;  // ascending epsilon
    Eigen::MatrixXcd vectors;              // QE vectors over the (r, p) rows, same order
    double max_modulus_error{0.0};
};

inline double wrap_quasienergy(double e, double period) {
    const double w = 2.0 * pi / period;
    double r = std::fmod(e, w);
    if (r < 0.0) r += w;
    if (r >= w) r -= w;
    return r;
}

/// Eigendecomposition of U(T) by complex Schur factorization; each QE vector is
/// projected on the stationary (q, s) basis to get its spread in q.
inline QuasiEnergyAnalysis quasienergy_analysis(const PropagatorMatrix& prop, const SpectrumGroups& groups,
                                                double period, double modulus_tol = 1e-6) {
    const auto schur = linalg::schur_eigen(prop.U);
    QuasiEnergyAnalysis out;
    const Eigen::Index dim = prop.U.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
    std::vector<double> eps(static_cast<std::size_t>(dim));
    for (Eigen::Index j = 0; j < dim; ++j) {
        const double mod = std::abs(schur.values(j));
        out.max_modulus_error = std::max(out.max_modulus_error, std::abs(mod - 1.0));
        eps[static_cast<std::size_t>(j)] = wrap_quasienergy(-std::arg(schur.values(j)) / period, period);
        order[static_cast<std::size_t>(j)] = j;
    }
    if (out.max_modulus_error > modulus_tol)
        throw NumericalError("quasienergy_analysis: eigenvalue modulus deviates from 1 by " +
                             std::to_string(out.max_modulus_error));
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return eps[static_cast<std::size_t>(a)] < eps[static_cast<std::size_t>(b)];
    });
    out.vectors.resize(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Eigen::Index j = order[static_cast<std::size_t>(k)];
        out.vectors.col(k) = schur.vectors.col(j);
        const auto mom = variance_q(project_onto_groups(schur.vectors.col(j), groups), groups.q_of_column);
        out.states.push_back({eps[static_cast<std::size_t>(j)], mom.delta_q, mom.q_bar,
                              std::abs(schur.values(j))});
    }
    return out;
}

/// Largest circular distance between each stationary energy (mod 2 pi / T) and
/// its nearest quasienergy.
inline double eigenphase_mismatch(std::span<const double> quasienergies, const Eigen::VectorXd& energies,
                                  double period) {
    const double w = 2.0 * pi / period;
    std::vector<double> qe(quasienergies.begin(), quasienergies.end());
    std::sort(qe.begin(), qe.end());
    if (qe.empty()) return energies.size() ? INFINITY : 0.0;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < energies.size(); ++j) {
        const double e = wrap_quasienergy(energies(j), period);
        auto it = std::lower_bound(qe.begin(), qe.end(), e);
        const double above = it == qe.end() ? qe.front() + w : *it;
        const double below = it == qe.begin() ? qe.back() - w : *(it - 1);
        worst = std::max(worst, std::min(above - e, e - below));
    }
    return worst;
}

}  // namespace ripple

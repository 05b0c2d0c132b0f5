// classical.hpp — driven billiard in the rippled channel 0 <= y <= d + a cos x.
//
// Between collisions x moves freely and y feels the uniform force
// F(t) = f0 (cos W1 t + cos W2 t), so the flight is integrated in closed form.
// Collisions are located by a sign check on sub-steps followed by bisection and
// resolved by specular reflection about the local wall normal.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ripple/errors.hpp"
#include "ripple/fit.hpp"
#include "ripple/floquet.hpp"
#include "ripple/model.hpp"

namespace ripple {

struct ClassicalState {
    double x{0.0};
    double y{0.0};
    double vx{0.0};
    double vy{0.0};
    double t{0.0};
};

struct Geometry {
    double d{pi};
    double a{0.01};
    double top(double x) const { return d + a * std::cos(x); }
};

struct Velocity {
    double vx{0.0};
    double vy{0.0};
};

/// Velocities on the energy surface |v|^2 = 2E where omega_y / omega_x = eta,
/// with omega_x = vx (x period 2 pi) and omega_y = pi vy / d (bounce period 2d / vy).
inline Velocity resonance_velocities(double E, double d, double eta) {
    if (!(E > 0.0)) throw DomainError("resonance_velocities: E must be positive");
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw PhysicsError("resonance_velocities: ratio eta = " + std::to_string(eta) +
                           " is not reachable on the energy surface");
    const double r = eta * d / pi;  // vy / vx
    const double vx = std::sqrt(2.0 * E / (1.0 + r * r));
    return {vx, r * vx};
}

/// Total energy with the driving potential f(t) y included, or kinetic only.
inline double classical_energy(const ClassicalState& s, const DrivingField& field, bool include_potential = true) {
    const double kin = 0.5 * (s.vx * s.vx + s.vy * s.vy);
    return include_potential ? kin + field.coupling(s.t) * s.y : kin;
}

struct AdvanceOptions {
    double substep_fraction{0.025};  // sub-step = fraction * d / |v|
    double max_substep{1e-3};
    double time_tol{1e-13};          // bisection stops below this
    double wall_tol{1e-10};          // allowed penetration after a collision
};

struct SectionPoint {
    double x{0.0};   // x mod 2 pi
    double vx{0.0};
};

struct AdvanceStats {
    long bottom{0};
    long top{0};
};

namespace detail {

struct Flight {
    double x0, y0, vx, vy0, t0, g0, h0;
    const DrivingField* field;

    // G = integral of the force, H = integral of G
    double G(double t) const { return -field->coupling_integral(t); }
    double H(double t) const {
        const double w1 = field->omega1, w2 = field->omega2;
        return -field->f0 * (std::cos(w1 * t) / (w1 * w1) + std::cos(w2 * t) / (w2 * w2));
    }
    double x(double tau) const { return x0 + vx * tau; }
    double y(double tau) const { return y0 + vy0 * tau + (H(t0 + tau) - h0 - g0 * tau); }
    double vy(double tau) const { return vy0 + G(t0 + tau) - g0; }
};

inline Flight make_flight(const ClassicalState& s, const DrivingField& f) {
    Flight fl{s.x, s.y, s.vx, s.vy, s.t, 0.0, 0.0, &f};
    fl.g0 = fl.G(s.t);
    fl.h0 = fl.H(s.t);
    return fl;
}

}  // namespace detail

/// Advances `s` by dt. Bottom-wall collisions are appended to `section` when
/// given. Throws PhysicsError if a collision cannot be resolved.
inline AdvanceStats advance_trajectory(ClassicalState& s, double dt, const DrivingField& field,
                                       const Geometry& geo, const AdvanceOptions& opt = {},
                                       std::vector<SectionPoint>* section = nullptr) {
    AdvanceStats st;
    if (s.y < -opt.wall_tol || s.y > geo.top(s.x) + opt.wall_tol)
        throw PhysicsError("advance_trajectory: state outside the channel");
    const double t_end = s.t + dt;
    const double speed = std::max(std::hypot(s.vx, s.vy), 1e-12);
    // the drive changes vy only by ~ 2 f0 / W per cycle; the sub-step follows the current speed
    const double h_nominal = std::min(opt.substep_fraction * geo.d / speed, opt.max_substep);
    auto inside = [&](double x, double y) { return y >= 0.0 && y <= geo.top(x); };

    int stalled = 0;
    while (s.t < t_end) {
        const double h = std::min(h_nominal, t_end - s.t);
        const auto fl = detail::make_flight(s, field);
        if (inside(fl.x(h), fl.y(h))) {
            s.x = fl.x(h);
            s.y = fl.y(h);
            s.vy = fl.vy(h);
            s.t = (h == t_end - s.t) ? t_end : s.t + h;
            continue;
        }
        double lo = 0.0, hi = h;
        while (hi - lo > opt.time_tol) {
            const double mid = 0.5 * (lo + hi);
            if (inside(fl.x(mid), fl.y(mid)))
                lo = mid;
            else
                hi = mid;
            if (mid == lo && mid == hi) break;
        }
        if (lo == 0.0 && ++stalled > 3) throw PhysicsError("advance_trajectory: collision loop does not advance");
        if (lo > 0.0) stalled = 0;
        double x = fl.x(lo), y = fl.y(lo), vx = s.vx, vy = fl.vy(lo);
        const bool bottom = fl.y(hi) < 0.0;
        if (bottom) {
            if (y < -opt.wall_tol) throw PhysicsError("advance_trajectory: bottom collision unresolved");
            vy = -vy;
            y = std::max(y, 0.0);
            ++st.bottom;
            if (section) {
                double xm = std::fmod(x, 2.0 * pi);
                if (xm < 0.0) xm += 2.0 * pi;
                section->push_back({xm, vx});
            }
        } else {
            if (y > geo.top(x) + opt.wall_tol) throw PhysicsError("advance_trajectory: top collision unresolved");
            // wall y = d + a cos x, outward normal of y - d - a cos x: (a sin x, 1)
            double nx = geo.a * std::sin(x), ny = 1.0;
            const double nn = std::hypot(nx, ny);
            nx /= nn;
            ny /= nn;
            const double dot = vx * nx + vy * ny;
            vx -= 2.0 * dot * nx;
            vy -= 2.0 * dot * ny;
            ++st.top;
        }
        s.x = x;
        s.y = y;
        s.vx = vx;
        s.vy = vy;
        s.t += lo;
    }
    return st;
}

struct TrajectoryEnsemble {
    std::vector<ClassicalState> states;
    std::vector<std::uint64_t> seeds;  // per-trajectory stream seeds
    double E0{0.0};
};

/// SplitMix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct SeedOptions {
    double x_spread_per_delta{5.0};  // x offset from the hyperbolic point up to this * delta
    double prerun_time{0.0};         // undriven pre-run up to this long; 0 -> 20 drive periods
    AdvanceOptions advance{};
};

/// Places `count` trajectories near the hyperbolic point (x = 0, bottom wall)
/// of the coupling resonance with velocity offset up to `delta` (relative),
/// then lets each run undriven for a random time so the phases spread along
/// the layer. Energy is exactly E at t = 0; time is reset to 0 afterwards.
inline TrajectoryEnsemble seed_stochastic_layer(double E, double eta, double delta, int count,
                                                std::uint64_t seed, const Geometry& geo,
                                                const DrivingField& field, const SeedOptions& opt = {}) {
    if (count < 1) throw DomainError("seed_stochastic_layer: count must be >= 1");
    if (!(delta >= 0.0 && delta <= 0.05)) throw DomainError("seed_stochastic_layer: delta must lie in [0, 0.05]");
    const auto v = resonance_velocities(E, geo.d, eta);
    const double prerun = opt.prerun_time > 0.0 ? opt.prerun_time : 20.0 * field.period;
    DrivingField free = field;
    free.f0 = 0.0;

    TrajectoryEnsemble ens;
    ens.E0 = E;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t s = stream_seed(seed, static_cast<std::uint64_t>(i));
        std::mt19937_64 rng(s);
        std::uniform_real_distribution<double> u(-1.0, 1.0), u01(0.0, 1.0);
        ClassicalState st;
        st.x = opt.x_spread_per_delta * delta * u(rng);
        st.vx = v.vx * (1.0 + delta * u(rng));
        st.vy = std::sqrt(std::max(0.0, 2.0 * E - st.vx * st.vx));
        const double tau = delta > 0.0 ? prerun * u01(rng) : 0.0;
        if (tau > 0.0) advance_trajectory(st, tau, free, geo, opt.advance);
        // rescale the speed so rounding in the pre-run cannot move E
        const double sp = std::hypot(st.vx, st.vy), target = std::sqrt(2.0 * E);
        st.vx *= target / sp;
        st.vy *= target / sp;
        st.t = 0.0;
        ens.states.push_back(st);
        ens.seeds.push_back(s);
    }
    return ens;
}

/// Population variance of the energies (1/N normalization).
inline double classical_energy_variance(std::span<const ClassicalState> states, const DrivingField& field,
                                        bool include_potential = true) {
    if (states.empty()) throw DomainError("classical_energy_variance: empty ensemble");
    double mean = 0.0;
    for (const auto& s : states) mean += classical_energy(s, field, include_potential);
    mean /= static_cast<double>(states.size());
    double var = 0.0;
    for (const auto& s : states) {
        const double e = classical_energy(s, field, include_potential) - mean;
        var += e * e;
    }
    return var / static_cast<double>(states.size());
}

struct ClassicalRecord {
    std::vector<double> t;
    std::vector<double> var_E;          // bookkeeping selected by include_potential
    std::vector<double> mean_E;
    std::vector<double> var_E_kinetic;
    std::vector<int> n_active;
    std::size_t size() const { return t.size(); }
};

/// Runs the ensemble for `periods` drive periods, sampling every `record_every`.
/// Trajectories whose collisions cannot be resolved are dropped (n_active).
inline ClassicalRecord run_ensemble(TrajectoryEnsemble& ens, const DrivingField& field, const Geometry& geo,
                                    int periods, int record_every, bool include_potential = true,
                                    const AdvanceOptions& opt = {}) {
    if (periods < 1 || record_every < 1) throw DomainError("run_ensemble: periods and record_every must be >= 1");
    std::vector<char> alive(ens.states.size(), 1);
    ClassicalRecord rec;
    auto sample = [&](double t) {
        std::vector<ClassicalState> live;
        for (std::size_t i = 0; i < ens.states.size(); ++i)
            if (alive[i]) live.push_back(ens.states[i]);
        if (live.empty()) throw PhysicsError("run_ensemble: every trajectory failed");
        double mean = 0.0;
        for (const auto& s : live) mean += classical_energy(s, field, include_potential);
        rec.t.push_back(t);
        rec.mean_E.push_back(mean / live.size());
        rec.var_E.push_back(classical_energy_variance(live, field, include_potential));
        rec.var_E_kinetic.push_back(classical_energy_variance(live, field, false));
        rec.n_active.push_back(static_cast<int>(live.size()));
    };
    sample(0.0);
    for (int n = 1; n <= periods; ++n) {
        for (std::size_t i = 0; i < ens.states.size(); ++i) {
            if (!alive[i]) continue;
            try {
                advance_trajectory(ens.states[i], field.period, field, geo, opt);
                ens.states[i].t = n * field.period;  // pin the clock against drift
            } catch (const PhysicsError&) {
                alive[i] = 0;
            }
        }
        if (n % record_every == 0) sample(n * field.period);
    }
    return rec;
}

/// D_cl = d(Var E)/dt over [t_begin, t_end]; same definition as the quantum fit.
inline DiffusionFit fit_classical_diffusion(const ClassicalRecord& rec, double t_begin, double t_end) {
    return fit_series(rec.t, rec.var_E, t_begin, t_end);
}

/// (x mod 2 pi, vx) at the first `bounces` bottom-wall collisions.
inline std::vector<SectionPoint> poincare_section(ClassicalState s, const DrivingField& field,
                                                  const Geometry& geo, long bounces,
                                                  const AdvanceOptions& opt = {}) {
    if (bounces < 1) throw DomainError("poincare_section: bounces must be >= 1");
    std::vector<SectionPoint> out;
    out.reserve(static_cast<std::size_t>(bounces));
    const double chunk = 2.0 * geo.d / std::max(std::abs(s.vy), 1e-6);
    while (static_cast<long>(out.size()) < bounces) advance_trajectory(s, chunk, field, geo, opt, &out);
    out.resize(static_cast<std::size_t>(bounces));
    return out;
}

}  // namespace ripple

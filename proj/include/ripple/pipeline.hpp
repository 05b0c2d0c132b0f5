// pipeline.hpp — runs one configured experiment and writes its artifacts.
//
// Every artifact except timing.json is a pure function of the resolved config
// (and the seed), so two runs produce byte-identical files.

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ripple/classical.hpp"
#include "ripple/config.hpp"
#include "ripple/floquet.hpp"
#include "ripple/io.hpp"
#include "ripple/spectrum.hpp"

#ifndef RIPPLE_VERSION
#define RIPPLE_VERSION "dev"
#endif

namespace ripple {

namespace fs = std::filesystem;

struct SpectrumStage {
    ResonanceBlock block;
    Eigensystem eig;
    SpectrumGroups groups;
    std::map<int, SeparatrixInfo> info;    // classified central groups
    std::map<int, std::string> failures;   // central groups that could not be classified
    std::vector<double> spacings;          // E_{q+1,0} - E_{q,0} over central groups
};

inline SpectrumStage compute_spectrum(const ModelParams& p, const RunConfig& cfg) {
    auto block = build_resonance_block(p, cfg.truncation.window());
    auto eig = diagonalize_block(block);
    auto groups = group_levels(eig, block, cfg.grouping);
    SpectrumStage st{std::move(block), std::move(eig), std::move(groups), {}, {}, {}};
    for (auto& g : st.groups.groups) {
        if (std::abs(g.q) > cfg.truncation.q_window) continue;
        try {
            st.info.emplace(g.q, classify_group(g, cfg.classify));
        } catch (const PhysicsError& e) {
            st.failures.emplace(g.q, e.what());
        }
    }
    st.spacings = group_spacings(st.groups, cfg.truncation.q_window);
    return st;
}

/// Concrete s for an initial-state selector. The above-separatrix state is the
/// first above-separatrix level at s >= 2 s_sep, mirroring the 0 / s_sep / ~2 s_sep
/// triple of the reference figure.
inline int resolve_initial_s(const SpectrumStage& st, const InitialState& init) {
    const Group* g = st.groups.find(init.q);
    if (!g) throw PhysicsError("initial state: group q=" + std::to_string(init.q) + " is empty");
    if (init.selector == "index") {
        if (init.index >= static_cast<int>(g->levels.size()))
            throw ConfigError("initial_state.s", "initial_state.s: group q=" + std::to_string(init.q) + " has only " +
                                                     std::to_string(g->levels.size()) + " levels");
        return init.index;
    }
    if (init.selector == "bottom") return 0;
    auto it = st.info.find(init.q);
    if (it == st.info.end()) {
        auto f = st.failures.find(init.q);
        throw PhysicsError("initial state: group q=" + std::to_string(init.q) + " is not classified" +
                           (f != st.failures.end() ? ": " + f->second : std::string()));
    }
    const auto& info = it->second;
    if (init.selector == "near_separatrix") return info.s_sep;
    for (const auto& l : g->levels)
        if (l.cls == LevelClass::above_separatrix && l.s >= 2 * info.s_sep) return l.s;
    throw PhysicsError("initial state: no resolved above-separatrix level at s >= 2 s_sep = " +
                       std::to_string(2 * info.s_sep) + " in group q=" + std::to_string(init.q));
}

inline json to_json(const SeparatrixInfo& i) {
    return {{"s_sep", i.s_sep},
            {"M_s", i.M_s},
            {"band", {i.band_begin, i.band_end}},
            {"resolved_levels", i.resolved_levels},
            {"equidistant_levels", i.equidistant_levels},
            {"bottom_spacing", i.bottom_spacing},
            {"bottom_spread", i.bottom_spread},
            {"paired_fraction", i.paired_fraction},
            {"first_pair", i.first_pair}};
}

inline json to_json(const DiffusionFit& f) {
    return {{"D", f.D},
            {"slope_error", f.slope_error},
            {"intercept", f.intercept},
            {"samples", f.samples},
            {"significance", io::number_or_null(f.significance())}};
}

inline io::CsvWriter spectrum_csv(const SpectrumStage& st, const RunConfig& cfg) {
    io::CsvWriter w({"q", "s", "energy", "class", "spacing", "p_mean", "boundary_weight"});
    for (const auto& g : st.groups.groups) {
        const bool classified = st.info.count(g.q) > 0;
        for (std::size_t i = 0; i < g.levels.size(); ++i) {
            const auto& l = g.levels[i];
            io::Cell spacing;
            if (i + 1 < g.levels.size()) spacing = g.levels[i + 1].energy - l.energy;
            std::string cls = classified ? std::string(to_string(l.cls))
                              : l.boundary_weight > cfg.classify.max_boundary_weight ? "unresolved"
                                                                                     : "unclassified";
            w.row({static_cast<long long>(g.q), static_cast<long long>(l.s), l.energy, cls, spacing, l.p_mean,
                   l.boundary_weight});
        }
    }
    return w;
}

inline json spectrum_summary(const SpectrumStage& st, const ModelParams& p) {
    json groups = json::array();
    for (const auto& [q, info] : st.info) {
        json g = to_json(info);
        g["q"] = q;
        g["levels"] = st.groups.find(q)->levels.size();
        groups.push_back(g);
    }
    json failures = json::object();
    for (const auto& [q, what] : st.failures) failures[std::to_string(q)] = what;
    json ratios = json::array();
    for (double s : st.spacings) ratios.push_back(s / p.omega_n0());
    return {{"dimension", st.block.dim()},
            {"group_count", st.groups.groups.size()},
            {"omega_n0", p.omega_n0()},
            {"group_spacings", st.spacings},
            {"group_spacing_ratios", ratios},
            {"ambiguous_states", st.groups.ambiguous.size()},
            {"max_residual", st.eig.max_residual},
            {"central_groups", groups},
            {"classification_failures", failures}};
}

struct EvolveStage {
    int s{0};
    PropagatorMatrix U;
    EvolutionRecord rec;
    DiffusionFit fit;
    std::optional<Localization> loc;
};

inline PropagatorMatrix build_propagator(const SpectrumStage& st, const ModelParams& p, const RunConfig& cfg) {
    return one_period_propagator(st.block, p.driving(), cfg.numerics.steps_per_period, cfg.numerics.propagator);
}

inline EvolveStage run_evolution(const SpectrumStage& st, const ModelParams& p, const RunConfig& cfg, int periods,
                                 const PropagatorMatrix* prebuilt = nullptr) {
    if (periods < cfg.numerics.fit_end)
        throw ConfigError("numerics.periods", "numerics.periods must reach the end of numerics.fit_window");
    EvolveStage ev;
    ev.s = resolve_initial_s(st, cfg.initial);
    ev.U = prebuilt ? *prebuilt : build_propagator(st, p, cfg);
    const Eigen::VectorXcd psi0 = st.eig.vectors.col(st.groups.column(cfg.initial.q, ev.s)).cast<std::complex<double>>();
    EvolutionOptions o = cfg.numerics.evolution;
    o.periods = periods;
    o.record_every = cfg.numerics.record_every;
    ev.rec = evolve(psi0, ev.U, st.groups, boundary_rows(st.block), p.period, o);
    ev.fit = fit_diffusion(ev.rec, cfg.numerics.fit_begin, cfg.numerics.fit_end, p.period);
    if (periods >= 500) ev.loc = detect_localization(ev.rec, p.period);
    return ev;
}

inline io::CsvWriter evolution_csv(const EvolutionRecord& r) {
    io::CsvWriter w({"N", "t", "delta_q", "q_bar", "energy_variance", "leakage", "norm"});
    for (std::size_t i = 0; i < r.size(); ++i)
        w.row({static_cast<long long>(r.N[i]), r.t[i], r.delta_q[i], r.q_bar[i], r.energy_variance[i], r.leakage[i],
               r.norm[i]});
    return w;
}

inline json localization_json(const std::optional<Localization>& loc, double period) {
    if (!loc) return nullptr;
    json j = {{"t_sat", nullptr}, {"N_sat", nullptr}, {"t_sat_over_T", nullptr}, {"plateau_level", nullptr},
              {"diffusive", loc->diffusive}, {"leading", to_json(loc->leading)}, {"trailing", to_json(loc->trailing)}};
    if (loc->t_sat) {
        j["t_sat"] = *loc->t_sat;
        j["N_sat"] = *loc->N_sat;
        j["t_sat_over_T"] = *loc->t_sat / period;
        j["plateau_level"] = loc->plateau_level;
    }
    return j;
}

inline double max_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}

struct ClassicalStage {
    TrajectoryEnsemble initial;
    ClassicalRecord rec;
    DiffusionFit fit;
    double E{0.0};
};

/// Classical ensemble at the energy of the unperturbed resonance state (n0, m0).
inline ClassicalStage run_classical(const ModelParams& p, const RunConfig& cfg) {
    if (cfg.ensemble.periods < cfg.numerics.fit_end)
        throw ConfigError("ensemble.periods", "ensemble.periods must reach the end of numerics.fit_window");
    ClassicalStage cs;
    cs.E = unperturbed_energy(p.n0, p.m0, p.k, p.d);
    const Geometry geo{p.d, p.a};
    const auto field = p.driving();
    cs.initial = seed_stochastic_layer(cs.E, cfg.ensemble.eta, cfg.ensemble.delta, cfg.ensemble.count, cfg.ensemble.seed,
                                       geo, field);
    TrajectoryEnsemble ens = cs.initial;
    cs.rec = run_ensemble(ens, field, geo, cfg.ensemble.periods, cfg.ensemble.record_every,
                          cfg.ensemble.include_potential);
    cs.fit = fit_classical_diffusion(cs.rec, cfg.numerics.fit_begin * p.period, cfg.numerics.fit_end * p.period);
    return cs;
}

inline io::CsvWriter classical_csv(const ClassicalRecord& r) {
    io::CsvWriter w({"t", "var_E", "mean_E", "n_active", "var_E_kinetic"});
    for (std::size_t i = 0; i < r.t.size(); ++i)
        w.row({r.t[i], r.var_E[i], r.mean_E[i], static_cast<long long>(r.n_active[i]), r.var_E_kinetic[i]});
    return w;
}

class Pipeline {
public:
    Pipeline(RunConfig cfg, fs::path out) : cfg_(std::move(cfg)), out_(std::move(out)) {}

    /// Runs the configured experiment. Throws ripple::Error on failure.
    void run() {
        std::error_code ec;
        fs::create_directories(out_, ec);
        if (ec) throw Error(ErrorCategory::config, "cannot create output directory " + out_.string());
        const auto t0 = clock::now();
        switch (cfg_.run) {
        case RunKind::spectrum: run_spectrum(); break;
        case RunKind::evolve: run_evolve(); break;
        case RunKind::qe: run_qe(); break;
        case RunKind::classical: run_classical_only(); break;
        case RunKind::compare: run_compare(); break;
        }
        timing_["total_seconds"] = seconds_since(t0);
        write_manifest();
        io::write_json(out_ / "timing.json", timing_);
    }

    const json& summary() const { return summary_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    using clock = std::chrono::steady_clock;
    static double seconds_since(clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    }

    template <class F>
    auto timed(const std::string& name, F&& f) {
        const auto t0 = clock::now();
        auto r = f();
        timing_["stages"][name] = seconds_since(t0);
        return r;
    }

    void artifact(const std::string& name) { artifacts_.push_back(name); }

    void run_spectrum() {
        const auto st = timed("spectrum", [&] { return compute_spectrum(cfg_.model, cfg_); });
        io::write_csv(out_ / "spectrum.csv", spectrum_csv(st, cfg_));
        artifact("spectrum.csv");
        summary_["spectrum"] = spectrum_summary(st, cfg_.model);
        write_summary();
    }

    void run_evolve() {
        const auto st = timed("spectrum", [&] { return compute_spectrum(cfg_.model, cfg_); });
        io::write_csv(out_ / "spectrum.csv", spectrum_csv(st, cfg_));
        artifact("spectrum.csv");
        const auto U = timed("propagator", [&] { return build_propagator(st, cfg_.model, cfg_); });
        const auto ev = timed("evolution", [&] { return run_evolution(st, cfg_.model, cfg_, cfg_.numerics.periods, &U); });
        io::write_csv(out_ / "evolution.csv", evolution_csv(ev.rec));
        artifact("evolution.csv");
        for (const auto& w : ev.rec.warnings) warnings_.push_back(w);
        summary_["spectrum"] = spectrum_summary(st, cfg_.model);
        summary_["initial_state"] = {{"q", cfg_.initial.q}, {"selector", cfg_.initial.selector}, {"s", ev.s}};
        summary_["propagator"] = {{"steps", ev.U.step_count}, {"unitarity_defect", ev.U.unitarity_defect}};
        summary_["D_q"] = ev.fit.D;
        summary_["D_q_error"] = ev.fit.slope_error;
        summary_["fit"] = to_json(ev.fit);
        summary_["fit_window"] = {cfg_.numerics.fit_begin, cfg_.numerics.fit_end};
        summary_["localization"] = localization_json(ev.loc, cfg_.model.period);
        summary_["t_sat"] = ev.loc && ev.loc->t_sat ? json(*ev.loc->t_sat) : json(nullptr);
        summary_["max_leakage"] = max_of(ev.rec.leakage);
        write_summary();
    }

    void run_qe() {
        const auto st = timed("spectrum", [&] { return compute_spectrum(cfg_.model, cfg_); });
        const auto U = timed("propagator", [&] { return build_propagator(st, cfg_.model, cfg_); });
        const auto qe = timed("quasienergy", [&] { return quasienergy_analysis(U, st.groups, cfg_.model.period); });
        io::CsvWriter w({"index", "quasienergy", "q_bar", "q_variance", "modulus"});
        std::vector<double> eps;
        double mean_var = 0.0, max_var = 0.0;
        for (std::size_t i = 0; i < qe.states.size(); ++i) {
            const auto& s = qe.states[i];
            w.row({static_cast<long long>(i), s.epsilon, s.q_bar, s.q_variance, s.modulus});
            eps.push_back(s.epsilon);
            mean_var += s.q_variance;
            max_var = std::max(max_var, s.q_variance);
        }
        io::write_csv(out_ / "quasienergy.csv", w);
        artifact("quasienergy.csv");
        summary_["spectrum"] = spectrum_summary(st, cfg_.model);
        summary_["propagator"] = {{"steps", U.step_count}, {"unitarity_defect", U.unitarity_defect}};
        summary_["quasienergy"] = {{"count", qe.states.size()},
                                   {"mean_q_variance", qe.states.empty() ? 0.0 : mean_var / qe.states.size()},
                                   {"max_q_variance", max_var},
                                   {"max_modulus_error", qe.max_modulus_error},
                                   {"eigenphase_mismatch", cfg_.model.f0 == 0.0
                                                               ? json(eigenphase_mismatch(eps, st.eig.values, cfg_.model.period))
                                                               : json(nullptr)}};
        write_summary();
    }

    void run_classical_only() {
        const auto cs = timed("classical", [&] { return run_classical(cfg_.model, cfg_); });
        io::write_csv(out_ / "classical.csv", classical_csv(cs.rec));
        artifact("classical.csv");
        timed("poincare", [&] {
            io::CsvWriter w({"trajectory_id", "x_mod_2pi", "vx"});
            const Geometry geo{cfg_.model.d, cfg_.model.a};
            const int n = std::min<int>(cfg_.ensemble.poincare_trajectories, static_cast<int>(cs.initial.states.size()));
            for (int i = 0; i < n; ++i)
                for (const auto& pt : poincare_section(cs.initial.states[static_cast<std::size_t>(i)], cfg_.model.driving(),
                                                       geo, cfg_.ensemble.poincare_bounces))
                    w.row({static_cast<long long>(i), pt.x, pt.vx});
            io::write_csv(out_ / "poincare.csv", w);
            return 0;
        });
        artifact("poincare.csv");
        summary_["classical"] = {{"energy", cs.E},
                                 {"count", cfg_.ensemble.count},
                                 {"active_at_end", cs.rec.n_active.back()},
                                 {"D_cl", cs.fit.D},
                                 {"D_cl_error", cs.fit.slope_error},
                                 {"fit", to_json(cs.fit)},
                                 {"fit_window_time", {cfg_.numerics.fit_begin * cfg_.model.period,
                                                      cfg_.numerics.fit_end * cfg_.model.period}}};
        write_summary();
    }

    void run_compare() {
        if (cfg_.compare.f0_over_a != 1000.0)
            warnings_.push_back("f0/a = " + io::format_double(cfg_.compare.f0_over_a) +
                                " differs from 1000; the guiding resonances may overlap differently");
        json entries = json::array();
        for (std::size_t i = 0; i < cfg_.compare.amplitudes.size(); ++i) {
            ModelParams p = cfg_.model;
            p.a = cfg_.compare.amplitudes[i];
            p.f0 = cfg_.compare.f0_over_a * p.a;
            try {
                validate(p, cfg_.detuning_tolerance);
            } catch (const ConfigError& e) {
                throw ConfigError("compare.amplitudes", std::string("compare.amplitudes: ") + e.what());
            }
            const std::string tag = "a" + std::to_string(i);
            const auto st = timed(tag + "_spectrum", [&] { return compute_spectrum(p, cfg_); });
            const auto ev = timed(tag + "_quantum", [&] { return run_evolution(st, p, cfg_, cfg_.numerics.fit_end); });
            for (const auto& w : ev.rec.warnings) warnings_.push_back(tag + ": " + w);
            const auto cs = timed(tag + "_classical", [&] { return run_classical(p, cfg_); });
            entries.push_back({{"a", p.a},
                               {"f0", p.f0},
                               {"s", ev.s},
                               {"D_q", ev.fit.D},
                               {"D_q_error", ev.fit.slope_error},
                               {"D_q_significance", io::number_or_null(ev.fit.significance())},
                               {"D_cl", cs.fit.D},
                               {"D_cl_error", cs.fit.slope_error},
                               {"D_cl_significance", io::number_or_null(cs.fit.significance())},
                               {"ratio_q_over_cl", io::number_or_null(ev.fit.D / cs.fit.D)},
                               {"quantum_weaker", ev.fit.D < cs.fit.D},
                               {"max_leakage", max_of(ev.rec.leakage)},
                               {"unitarity_defect", ev.U.unitarity_defect}});
        }
        json cmp = {{"fit_window", {cfg_.numerics.fit_begin, cfg_.numerics.fit_end}},
                    {"f0_over_a", cfg_.compare.f0_over_a},
                    {"initial_state", {{"q", cfg_.initial.q}, {"selector", cfg_.initial.selector}}},
                    {"entries", entries},
                    {"warnings", warnings_}};
        io::write_json(out_ / "compare.json", cmp);
        artifact("compare.json");
        summary_["compare"] = entries;
        write_summary();
    }

    void write_summary() {
        summary_["run"] = std::string(to_string(cfg_.run));
        summary_["warnings"] = warnings_;
        io::write_json(out_ / "summary.json", summary_);
        artifact("summary.json");
    }

    void write_manifest() {
        json echo = to_json(cfg_);
        echo.erase("output_dir");  // keeps manifests of identical runs in different places identical
        json m = {{"tool", "ripple"},
                  {"version", RIPPLE_VERSION},
                  {"run", std::string(to_string(cfg_.run))},
                  {"scale", std::string(to_string(cfg_.scale))},
                  {"seed", cfg_.ensemble.seed},
                  {"resonance",
                   {{"n0", cfg_.model.n0},
                    {"m0", cfg_.model.m0},
                    {"located_from_target", cfg_.resonance_from_target},
                    {"detuning", cfg_.resonance_detuning},
                    {"omega_n0", cfg_.model.omega_n0()},
                    {"omega_m0", cfg_.model.omega_m0()}}},
                  {"config", echo},
                  {"artifacts", artifacts_},
                  {"warnings", warnings_},
                  {"wall_clock", "timing.json"}};
        io::write_json(out_ / "manifest.json", m);
    }

    RunConfig cfg_;
    fs::path out_;
    json summary_ = json::object();
    json timing_ = json::object();
    std::vector<std::string> warnings_;
    std::vector<std::string> artifacts_;
};

}  // namespace ripple

// config.hpp — one JSON file = one experiment. Strict schema: unknown keys are
// errors, type errors name the dotted key. Omitted values come from the scale
// preset ("paper" or "ci").

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ripple/classical.hpp"
#include "ripple/floquet.hpp"
#include "ripple/model.hpp"
#include "ripple/spectrum.hpp"

namespace ripple {

using json = nlohmann::json;

enum class RunKind { spectrum, evolve, qe, classical, compare };

inline std::string_view to_string(RunKind r) {
    switch (r) {
    case RunKind::spectrum: return "spectrum";
    case RunKind::evolve: return "evolve";
    case RunKind::qe: return "qe";
    case RunKind::classical: return "classical";
    case RunKind::compare: return "compare";
    }
    return "?";
}

inline std::optional<RunKind> parse_run_kind(std::string_view s) {
    for (auto r : {RunKind::spectrum, RunKind::evolve, RunKind::qe, RunKind::classical, RunKind::compare})
        if (to_string(r) == s) return r;
    return std::nullopt;
}

enum class Scale { paper, ci };

inline std::string_view to_string(Scale s) { return s == Scale::paper ? "paper" : "ci"; }

inline std::optional<Scale> parse_scale(std::string_view s) {
    if (s == "paper") return Scale::paper;
    if (s == "ci") return Scale::ci;
    return std::nullopt;
}

struct TruncationConfig {
    int r_max{50};
    int p_window{8};   // p in [-p_window, p_window]
    int q_window{2};   // central groups |q| <= q_window are classified
    Truncation window() const { return {r_max, -p_window, p_window}; }
};

/// Which (q, s) eigenstate to start from. Named selectors are resolved against
/// the classified group at run time.
struct InitialState {
    int q{0};
    std::string selector{"near_separatrix"};  // bottom | near_separatrix | above_separatrix | index
    int index{-1};                            // used when selector == "index"
};

struct NumericsConfig {
    int steps_per_period{256};
    int periods{500};
    int record_every{1};
    int fit_begin{20};
    int fit_end{150};
    PropagatorOptions propagator{};
    EvolutionOptions evolution{};  // periods/record_every are copied in from above
};

struct EnsembleConfig {
    int count{2000};
    double delta{0.01};
    std::uint64_t seed{20240501};
    int periods{150};
    int record_every{1};
    bool include_potential{true};
    double eta{1.0};
    int poincare_trajectories{10};
    long poincare_bounces{1000};
};

struct CompareConfig {
    std::vector<double> amplitudes{0.006, 0.008, 0.01};
    double f0_over_a{1000.0};
};

struct RunConfig {
    RunKind run{RunKind::spectrum};
    Scale scale{Scale::paper};
    ModelParams model{};
    double omega_target{400.0};
    double detuning_tolerance{0.01};
    bool resonance_from_target{true};  // n0, m0 came from locate_resonance
    double resonance_detuning{0.0};
    TruncationConfig truncation{};
    InitialState initial{};
    NumericsConfig numerics{};
    ClassifyOptions classify{};
    GroupingOptions grouping{};
    EnsembleConfig ensemble{};
    CompareConfig compare{};
    std::string output_dir{"out"};
};

/// Scale presets. "ci" shrinks the resonance to omega ~ 100 and scales the
/// drive with it (same Omega/omega ratios, same f0/omega_n0).
inline RunConfig preset(Scale s) {
    RunConfig c;
    c.scale = s;
    if (s == Scale::ci) {
        c.omega_target = 100.0;
        c.model.f0 = 2.5;
        c.model.omega1 = 87.5;
        c.model.omega2 = 112.5;
        c.model.period = 7.0 * 2.0 * pi / 87.5;
        c.truncation = {14, 8, 2};
        c.compare.f0_over_a = 250.0;
    }
    return c;
}

namespace detail {

/// Walks one JSON object, remembering which keys were read so the rest can be
/// rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k);
    }
    const json& raw(const std::string& k) {
        seen_.insert(k);
        return j_.at(k);
    }

    void number(const std::string& k, double& out) {
        if (!has(k)) return;
        const auto& v = j_.at(k);
        if (!v.is_number()) throw ConfigError(key(k), key(k) + ": expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ConfigError(key(k), key(k) + ": must be finite");
    }
    template <class Int>
    void integer(const std::string& k, Int& out) {
        if (!has(k)) return;
        const auto& v = j_.at(k);
        if (v.is_number_unsigned()) {
            const auto u = v.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max()))
                throw ConfigError(key(k), key(k) + ": out of range");
            out = static_cast<Int>(u);
            return;
        }
        if (!v.is_number_integer()) throw ConfigError(key(k), key(k) + ": expected an integer");
        const auto i = v.get<std::int64_t>();
        if (i < static_cast<std::int64_t>(std::numeric_limits<Int>::min()) ||
            (i > 0 && static_cast<std::uint64_t>(i) > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())))
            throw ConfigError(key(k), key(k) + ": out of range");
        out = static_cast<Int>(i);
    }
    void boolean(const std::string& k, bool& out) {
        if (!has(k)) return;
        const auto& v = j_.at(k);
        if (!v.is_boolean()) throw ConfigError(key(k), key(k) + ": expected true or false");
        out = v.get<bool>();
    }
    void string(const std::string& k, std::string& out) {
        if (!has(k)) return;
        const auto& v = j_.at(k);
        if (!v.is_string()) throw ConfigError(key(k), key(k) + ": expected a string");
        out = v.get<std::string>();
    }
    std::optional<Section> child(const std::string& k) {
        if (!has(k)) return std::nullopt;
        return Section(j_.at(k), key(k));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key '" + key(it.key()) + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

/// Smallest T with T*omega1/2pi and T*omega2/2pi both integers (up to 1000 cycles).
inline double common_period(double w1, double w2) {
    for (int j1 = 1; j1 <= 1000; ++j1) {
        const double t = 2.0 * pi * j1 / w1;
        if (cycles_per_period(w2, t) > 0) return t;
    }
    throw ConfigError("driving.period", "omega1 and omega2 have no common period of <= 1000 cycles; give driving.period");
}

inline void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, key + ": " + what);
}

}  // namespace detail

/// Parses and validates a configuration. `scale_override` (the CLI --scale)
/// wins over the file's "scale" key.
inline RunConfig parse_config(const json& root, std::optional<Scale> scale_override = std::nullopt) {
    detail::Section top(root, "");

    Scale scale = Scale::paper;
    std::string tmp;
    if (top.has("scale")) {
        top.string("scale", tmp);
        auto s = parse_scale(tmp);
        if (!s) throw ConfigError("scale", "scale: expected \"paper\" or \"ci\"");
        scale = *s;
    }
    if (scale_override) scale = *scale_override;
    RunConfig c = preset(scale);

    if (!top.has("run")) throw ConfigError("run", "run: required (spectrum | evolve | qe | classical | compare)");
    top.string("run", tmp);
    auto rk = parse_run_kind(tmp);
    if (!rk) throw ConfigError("run", "run: expected spectrum | evolve | qe | classical | compare");
    c.run = *rk;

    bool n0_given = false, m0_given = false;
    if (auto m = top.child("model")) {
        m->number("d", c.model.d);
        m->number("a", c.model.a);
        m->number("k", c.model.k);
        m->number("omega_target", c.omega_target);
        m->number("detuning_tolerance", c.detuning_tolerance);
        n0_given = m->has("n0");
        m->integer("n0", c.model.n0);
        m0_given = m->has("m0");
        m->integer("m0", c.model.m0);
        m->finish();
    }
    bool period_given = false, omega_given = false;
    if (auto d = top.child("driving")) {
        d->number("f0", c.model.f0);
        omega_given = d->has("omega1") || d->has("omega2");
        d->number("omega1", c.model.omega1);
        d->number("omega2", c.model.omega2);
        period_given = d->has("period");
        d->number("period", c.model.period);
        d->finish();
    }
    if (auto t = top.child("truncation")) {
        t->integer("r_max", c.truncation.r_max);
        t->integer("p_window", c.truncation.p_window);
        t->integer("q_window", c.truncation.q_window);
        t->finish();
    }
    if (auto s = top.child("initial_state")) {
        s->integer("q", c.initial.q);
        if (s->has("s")) {
            const auto& v = s->raw("s");
            if (v.is_string()) {
                c.initial.selector = v.get<std::string>();
                if (c.initial.selector != "bottom" && c.initial.selector != "near_separatrix" &&
                    c.initial.selector != "above_separatrix")
                    throw ConfigError("initial_state.s",
                                      "initial_state.s: expected bottom | near_separatrix | above_separatrix | integer");
            } else if (v.is_number_integer()) {
                c.initial.selector = "index";
                c.initial.index = v.get<int>();
                detail::require(c.initial.index >= 0, "initial_state.s", "index must be >= 0");
            } else {
                throw ConfigError("initial_state.s", "initial_state.s: expected a selector name or an integer");
            }
        }
        s->finish();
    }
    if (auto n = top.child("numerics")) {
        n->integer("steps_per_period", c.numerics.steps_per_period);
        n->integer("periods", c.numerics.periods);
        n->integer("record_every", c.numerics.record_every);
        if (n->has("fit_window")) {
            const auto& v = n->raw("fit_window");
            if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
                throw ConfigError("numerics.fit_window", "numerics.fit_window: expected [N_start, N_end]");
            c.numerics.fit_begin = v[0].get<int>();
            c.numerics.fit_end = v[1].get<int>();
        }
        if (n->has("scheme")) {
            n->string("scheme", tmp);
            if (tmp == "yoshida4") c.numerics.propagator.scheme = SplittingScheme::yoshida4;
            else if (tmp == "strang") c.numerics.propagator.scheme = SplittingScheme::strang;
            else throw ConfigError("numerics.scheme", "numerics.scheme: expected yoshida4 or strang");
        }
        n->boolean("half_period", c.numerics.propagator.half_period);
        n->number("unitarity_tol", c.numerics.propagator.unitarity_tol);
        n->number("warn_leakage", c.numerics.evolution.warn_leakage);
        n->number("abort_leakage", c.numerics.evolution.abort_leakage);
        n->finish();
    }
    if (auto s = top.child("spectrum")) {
        s->number("inside_tolerance", c.classify.inside_tolerance);
        s->number("pair_gap", c.classify.pair_gap);
        s->number("band_fraction", c.classify.band_fraction);
        s->number("max_boundary_weight", c.classify.max_boundary_weight);
        s->number("ambiguity", c.grouping.ambiguity);
        s->finish();
    }
    if (auto e = top.child("ensemble")) {
        e->integer("count", c.ensemble.count);
        e->number("delta", c.ensemble.delta);
        e->integer("seed", c.ensemble.seed);
        e->integer("periods", c.ensemble.periods);
        e->integer("record_every", c.ensemble.record_every);
        e->boolean("include_potential", c.ensemble.include_potential);
        e->number("eta", c.ensemble.eta);
        e->integer("poincare_trajectories", c.ensemble.poincare_trajectories);
        e->integer("poincare_bounces", c.ensemble.poincare_bounces);
        e->finish();
    }
    if (auto cmp = top.child("compare")) {
        if (cmp->has("amplitudes")) {
            const auto& v = cmp->raw("amplitudes");
            if (!v.is_array() || v.empty())
                throw ConfigError("compare.amplitudes", "compare.amplitudes: expected a non-empty array of numbers");
            c.compare.amplitudes.clear();
            for (const auto& x : v) {
                if (!x.is_number()) throw ConfigError("compare.amplitudes", "compare.amplitudes: expected numbers");
                c.compare.amplitudes.push_back(x.get<double>());
            }
        }
        cmp->number("f0_over_a", c.compare.f0_over_a);
        cmp->finish();
    }
    top.string("output_dir", c.output_dir);
    top.finish();

    // derived values
    if (omega_given && !period_given) c.model.period = detail::common_period(c.model.omega1, c.model.omega2);
    if (n0_given != m0_given) throw ConfigError(n0_given ? "model.m0" : "model.n0", "give both model.n0 and model.m0 or neither");
    if (!n0_given) {
        detail::require(c.omega_target > 0.0, "model.omega_target", "must be positive");
        detail::require(c.model.d > 0.0, "model.d", "must be positive");
        ResonanceLocation loc;
        try {
            loc = locate_resonance(c.omega_target, c.model.d, c.model.k);
        } catch (const PhysicsError& e) {
            throw ConfigError("model.omega_target", std::string("model.omega_target: ") + e.what());
        }
        c.model.n0 = loc.n0;
        c.model.m0 = loc.m0;
        c.resonance_from_target = true;
        c.resonance_detuning = loc.detuning;
    } else {
        c.resonance_from_target = false;
        c.resonance_detuning = c.model.omega_n0() - c.model.omega_m0();
    }

    try {
        validate(c.model, c.detuning_tolerance);
    } catch (const ConfigError& e) {
        static const std::set<std::string> model_keys{"d", "a", "k", "n0", "m0"};
        const std::string section = model_keys.count(e.key) ? "model." : "driving.";
        throw ConfigError(section + e.key, section + e.key + ": " + e.what());
    }

    using detail::require;
    require(c.truncation.r_max >= 1, "truncation.r_max", "must be >= 1");
    require(c.truncation.p_window >= 1, "truncation.p_window", "must be >= 1");
    require(c.truncation.q_window >= 0 && c.truncation.q_window <= c.truncation.p_window, "truncation.q_window",
            "must lie in [0, p_window]");
    require(c.model.m0 - c.truncation.p_window - c.truncation.r_max >= 1, "truncation.p_window",
            "window reaches transverse modes m < 1");
    require(std::abs(c.initial.q) <= c.truncation.q_window, "initial_state.q", "must be a central group (|q| <= q_window)");
    require(c.numerics.steps_per_period >= 2, "numerics.steps_per_period", "must be >= 2");
    require(c.numerics.periods >= 1, "numerics.periods", "must be >= 1");
    require(c.numerics.record_every >= 1, "numerics.record_every", "must be >= 1");
    require(c.numerics.fit_begin >= 0 && c.numerics.fit_end > c.numerics.fit_begin, "numerics.fit_window",
            "need 0 <= N_start < N_end");
    require(c.numerics.propagator.unitarity_tol > 0.0, "numerics.unitarity_tol", "must be positive");
    require(c.numerics.evolution.warn_leakage > 0.0 &&
                c.numerics.evolution.abort_leakage >= c.numerics.evolution.warn_leakage,
            "numerics.abort_leakage", "need 0 < warn_leakage <= abort_leakage");
    require(c.classify.inside_tolerance > 0.0, "spectrum.inside_tolerance", "must be positive");
    require(c.classify.pair_gap > 0.0 && c.classify.pair_gap < 1.0, "spectrum.pair_gap", "must lie in (0, 1)");
    require(c.classify.band_fraction > 0.0 && c.classify.band_fraction < 1.0, "spectrum.band_fraction",
            "must lie in (0, 1)");
    require(c.classify.max_boundary_weight > 0.0, "spectrum.max_boundary_weight", "must be positive");
    require(c.grouping.ambiguity > 0.0 && c.grouping.ambiguity <= 0.5, "spectrum.ambiguity", "must lie in (0, 0.5]");
    require(c.ensemble.count >= 2, "ensemble.count", "must be >= 2");
    require(c.ensemble.delta >= 0.0 && c.ensemble.delta <= 0.05, "ensemble.delta", "must lie in [0, 0.05]");
    require(c.ensemble.periods >= 1, "ensemble.periods", "must be >= 1");
    require(c.ensemble.record_every >= 1, "ensemble.record_every", "must be >= 1");
    require(c.ensemble.eta > 0.0, "ensemble.eta", "must be positive");
    require(c.ensemble.poincare_trajectories >= 0, "ensemble.poincare_trajectories", "must be >= 0");
    require(c.ensemble.poincare_bounces >= 100, "ensemble.poincare_bounces", "must be >= 100");
    for (double a : c.compare.amplitudes)
        require(a > 0.0 && a / c.model.d < 0.1, "compare.amplitudes", "each amplitude must satisfy 0 < a < 0.1 d");
    require(c.compare.f0_over_a > 0.0, "compare.f0_over_a", "must be positive");
    require(!c.output_dir.empty(), "output_dir", "must not be empty");
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path, std::optional<Scale> scale_override = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    json root;
    try {
        root = json::parse(in, nullptr, true, /*ignore_comments=*/false);
    } catch (const json::parse_error& e) {
        throw ConfigError("", "config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(root, scale_override);
}

/// Fully resolved configuration; feeding it back through parse_config gives the
/// same RunConfig.
inline json to_json(const RunConfig& c) {
    json j;
    j["run"] = std::string(to_string(c.run));
    j["scale"] = std::string(to_string(c.scale));
    j["model"] = {{"d", c.model.d},
                  {"a", c.model.a},
                  {"k", c.model.k},
                  {"n0", c.model.n0},
                  {"m0", c.model.m0},
                  {"omega_target", c.omega_target},
                  {"detuning_tolerance", c.detuning_tolerance}};
    j["driving"] = {{"f0", c.model.f0}, {"omega1", c.model.omega1}, {"omega2", c.model.omega2}, {"period", c.model.period}};
    j["truncation"] = {{"r_max", c.truncation.r_max}, {"p_window", c.truncation.p_window}, {"q_window", c.truncation.q_window}};
    json s = c.initial.selector == "index" ? json(c.initial.index) : json(c.initial.selector);
    j["initial_state"] = {{"q", c.initial.q}, {"s", s}};
    j["numerics"] = {{"steps_per_period", c.numerics.steps_per_period},
                     {"periods", c.numerics.periods},
                     {"record_every", c.numerics.record_every},
                     {"fit_window", {c.numerics.fit_begin, c.numerics.fit_end}},
                     {"scheme", c.numerics.propagator.scheme == SplittingScheme::yoshida4 ? "yoshida4" : "strang"},
                     {"half_period", c.numerics.propagator.half_period},
                     {"unitarity_tol", c.numerics.propagator.unitarity_tol},
                     {"warn_leakage", c.numerics.evolution.warn_leakage},
                     {"abort_leakage", c.numerics.evolution.abort_leakage}};
    j["spectrum"] = {{"inside_tolerance", c.classify.inside_tolerance},
                     {"pair_gap", c.classify.pair_gap},
                     {"band_fraction", c.classify.band_fraction},
                     {"max_boundary_weight", c.classify.max_boundary_weight},
                     {"ambiguity", c.grouping.ambiguity}};
    j["ensemble"] = {{"count", c.ensemble.count},
                     {"delta", c.ensemble.delta},
                     {"seed", c.ensemble.seed},
                     {"periods", c.ensemble.periods},
                     {"record_every", c.ensemble.record_every},
                     {"include_potential", c.ensemble.include_potential},
                     {"eta", c.ensemble.eta},
                     {"poincare_trajectories", c.ensemble.poincare_trajectories},
                     {"poincare_bounces", c.ensemble.poincare_bounces}};
    j["compare"] = {{"amplitudes", c.compare.amplitudes}, {"f0_over_a", c.compare.f0_over_a}};
    j["output_dir"] = c.output_dir;
    return j;
}

/// Short schema description for --help.
inline const char* schema_summary() {
    return R"(Config file (JSON, unknown keys rejected; omitted values come from the scale preset):
  run            spectrum | evolve | qe | classical | compare        (required)
  scale          paper | ci                                           (default paper)
  model          d, a, k, omega_target, detuning_tolerance, n0, m0   (n0/m0 located from omega_target if omitted)
  driving        f0, omega1, omega2, period                          (period derived from omega1/omega2 if omitted)
  truncation     r_max, p_window, q_window
  initial_state  q, s = bottom | near_separatrix | above_separatrix | <index>
  numerics       steps_per_period, periods, record_every, fit_window [N0, N1],
                 scheme (yoshida4 | strang), half_period, unitarity_tol, warn_leakage, abort_leakage
  spectrum       inside_tolerance, pair_gap, band_fraction, max_boundary_weight, ambiguity
  ensemble       count, delta, seed, periods, record_every, include_potential, eta,
                 poincare_trajectories, poincare_bounces
  compare        amplitudes [a...], f0_over_a
  output_dir     directory for artifacts (overridden by --out)
Presets: paper = resonance at omega 400, Omega 350/450, f0 10, r_max 50, p_window 8;
         ci    = resonance at omega 100, Omega 87.5/112.5, f0 2.5, r_max 14, p_window 8.)";
}

}  // namespace ripple

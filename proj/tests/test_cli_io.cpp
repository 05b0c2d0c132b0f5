#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "ripple/pipeline.hpp"

using namespace ripple;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ripple_cli_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string config_key_of(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.key;
    }
    return "<accepted>";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RIPPLE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path write_config(const fs::path& dir, const json& j) {
    const fs::path p = dir / "config.json";
    io::write_json(p, j);
    return p;
}

}  // namespace

TEST(Config, MinimalSpectrumUsesDefaults) {
    const auto c = parse_config(json{{"run", "spectrum"}});
    EXPECT_EQ(c.run, RunKind::spectrum);
    EXPECT_DOUBLE_EQ(c.model.d, pi);
    EXPECT_DOUBLE_EQ(c.model.k, 0.1);
    EXPECT_EQ(c.model.n0, 400);
    EXPECT_EQ(c.model.m0, 400);
    EXPECT_TRUE(c.resonance_from_target);
    EXPECT_EQ(c.numerics.steps_per_period, 256);

    const auto ci = parse_config(json{{"run", "spectrum"}}, Scale::ci);
    EXPECT_EQ(ci.model.n0, 100);
    EXPECT_DOUBLE_EQ(ci.model.omega1, 87.5);
    EXPECT_EQ(cycles_per_period(ci.model.omega1, ci.model.period), 7);
    EXPECT_EQ(cycles_per_period(ci.model.omega2, ci.model.period), 9);
}

TEST(Config, RejectionsNameTheKey) {
    EXPECT_EQ(config_key_of({{"run", "spectrum"}, {"model", {{"k", 0.0}}}}), "model.k");
    EXPECT_EQ(config_key_of({{"run", "spectrum"}, {"driving", {{"omega1", 350.0}, {"omega2", 450.0}, {"period", 0.1}}}}),
              "driving.period");
    EXPECT_EQ(config_key_of({{"run", "spectrum"}, {"modle", json::object()}}), "modle");
    EXPECT_EQ(config_key_of({{"run", "spectrum"}, {"model", {{"amplitude", 0.01}}}}), "model.amplitude");
    EXPECT_EQ(config_key_of({{"run", "spectrum"}, {"model", {{"a", "0.01"}}}}), "model.a");
    EXPECT_EQ(config_key_of({{"run", "spectrum"}, {"numerics", {{"periods", 1.5}}}}), "numerics.periods");
    EXPECT_EQ(config_key_of({{"run", "plot"}}), "run");
    EXPECT_EQ(config_key_of(json::object()), "run");
    EXPECT_EQ(config_key_of({{"run", "spectrum"}, {"model", {{"n0", 400}}}}), "model.m0");
    EXPECT_EQ(config_key_of({{"run", "spectrum"}, {"model", {{"d", 0.5}}}}), "model.omega_target");
    EXPECT_EQ(config_key_of({{"run", "evolve"}, {"initial_state", {{"s", "middle"}}}}), "initial_state.s");
    EXPECT_EQ(config_key_of({{"run", "spectrum"}, {"driving", {{"omega1", 300.0}, {"omega2", 400.0}}}}), "driving.omega1");
    EXPECT_EQ(config_key_of({{"run", "classical"}, {"ensemble", {{"delta", 0.2}}}}), "ensemble.delta");
    EXPECT_EQ(config_key_of({{"run", "compare"}, {"compare", {{"amplitudes", json::array()}}}}), "compare.amplitudes");
}

TEST(Config, DerivedPeriodAndRoundTrip) {
    const auto c = parse_config({{"run", "evolve"},
                                 {"driving", {{"omega1", 350.0}, {"omega2", 450.0}}},
                                 {"initial_state", {{"s", 3}}},
                                 {"numerics", {{"fit_window", {10, 120}}, {"scheme", "strang"}}}});
    EXPECT_NEAR(c.model.period, 7.0 * 2.0 * pi / 350.0, 1e-15);
    EXPECT_EQ(c.initial.selector, "index");
    EXPECT_EQ(c.initial.index, 3);
    const json echo = to_json(c);
    const auto c2 = parse_config(echo);
    EXPECT_EQ(to_json(c2), echo);
    EXPECT_FALSE(c2.resonance_from_target);  // n0, m0 now explicit
}

TEST(Config, FileErrors) {
    const auto dir = scratch("files");
    EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
    io::write_text(dir / "bad.json", "{ \"run\": ");
    EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
    io::write_text(dir / "ok.json", "{ \"run\": \"qe\", \"scale\": \"ci\" }");
    EXPECT_EQ(load_config(dir / "ok.json").model.n0, 100);
    EXPECT_EQ(load_config(dir / "ok.json", Scale::paper).model.n0, 400);
}

TEST(Export, CsvFormatting) {
    io::CsvWriter empty({"t", "var_E"});
    EXPECT_EQ(empty.str(), "t,var_E\n");

    io::CsvWriter w({"a", "b", "c", "d"});
    w.row({0.1, 3LL, std::string("inside"), io::Cell{}});
    w.row({1.0 / 3.0, -7LL, std::string("x"), 2.5e-300});
    const std::string s = w.str();
    EXPECT_EQ(s, "a,b,c,d\n0.10000000000000001,3,inside,\n0.33333333333333331,-7,x,2.5e-300\n");
    EXPECT_EQ(s.find('\r'), std::string::npos);
    EXPECT_EQ(std::stod(io::format_double(1.0 / 3.0)), 1.0 / 3.0);
    EXPECT_THROW(w.row({1.0}), NumericalError);
}

TEST(Export, SameRecordTwiceIsByteIdentical) {
    const auto dir = scratch("twice");
    EvolutionRecord r;
    for (int n = 0; n < 5; ++n) {
        r.N.push_back(n);
        r.t.push_back(0.1 * n);
        r.delta_q.push_back(std::sqrt(n));
        r.q_bar.push_back(-0.5 * n);
        r.energy_variance.push_back(1e4 * std::sqrt(n));
        r.leakage.push_back(1e-7 * n);
        r.norm.push_back(1.0 - 1e-15 * n);
    }
    io::write_csv(dir / "a.csv", evolution_csv(r));
    io::write_csv(dir / "b.csv", evolution_csv(r));
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));

    const json j = {{"D_q", 1.0 / 7.0}, {"t_sat", nullptr}, {"list", {1, 2.5, "x"}}};
    io::write_json(dir / "s.json", j);
    EXPECT_EQ(json::parse(slurp(dir / "s.json")), j);
    EXPECT_EQ(io::number_or_null(std::nan("")), json(nullptr));
}

TEST(Pipeline, SpectrumAtCiScale) {
    const auto dir = scratch("spectrum");
    auto cfg = parse_config({{"run", "spectrum"}}, Scale::ci);
    Pipeline(cfg, dir / "one").run();
    Pipeline(cfg, dir / "two").run();
    for (const char* f : {"spectrum.csv", "summary.json", "manifest.json"}) {
        ASSERT_TRUE(fs::exists(dir / "one" / f)) << f;
        EXPECT_EQ(slurp(dir / "one" / f), slurp(dir / "two" / f)) << f;
    }
    EXPECT_TRUE(fs::exists(dir / "one" / "timing.json"));
    const auto sum = json::parse(slurp(dir / "one" / "summary.json"));
    EXPECT_GE(sum["spectrum"]["group_count"].get<int>(), 10);
    const auto man = json::parse(slurp(dir / "one" / "manifest.json"));
    json echo = to_json(cfg);
    echo.erase("output_dir");  // where the files went is not part of the experiment
    EXPECT_EQ(man["config"], echo);
    EXPECT_EQ(man["resonance"]["n0"], 100);

    // header and the class column
    std::istringstream csv(slurp(dir / "one" / "spectrum.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "q,s,energy,class,spacing,p_mean,boundary_weight");
    bool near = false;
    while (std::getline(csv, line)) near = near || line.find(",near_separatrix,") != std::string::npos;
    EXPECT_TRUE(near);
}

TEST(Pipeline, SelectorsResolveAgainstClassification) {
    auto cfg = parse_config({{"run", "spectrum"}}, Scale::ci);
    const auto st = compute_spectrum(cfg.model, cfg);
    const auto& info = st.info.at(0);
    InitialState init;
    init.selector = "bottom";
    EXPECT_EQ(resolve_initial_s(st, init), 0);
    init.selector = "near_separatrix";
    EXPECT_EQ(resolve_initial_s(st, init), info.s_sep);
    init.selector = "above_separatrix";
    const int s = resolve_initial_s(st, init);
    EXPECT_GE(s, 2 * info.s_sep);
    EXPECT_EQ(st.groups.find(0)->levels[static_cast<std::size_t>(s)].cls, LevelClass::above_separatrix);
    init.selector = "index";
    init.index = 1000;
    EXPECT_THROW(resolve_initial_s(st, init), ConfigError);
}

TEST(Pipeline, EvolveWritesDiffusionAndSaturationFields) {
    const auto dir = scratch("evolve");
    auto cfg = parse_config({{"run", "evolve"}, {"numerics", {{"periods", 500}}}}, Scale::ci);
    Pipeline(cfg, dir).run();
    const auto sum = json::parse(slurp(dir / "summary.json"));
    EXPECT_TRUE(sum.contains("D_q"));
    EXPECT_TRUE(sum.contains("t_sat"));
    EXPECT_EQ(sum["initial_state"]["selector"], "near_separatrix");
    EXPECT_LE(sum["propagator"]["unitarity_defect"].get<double>(), 1e-8);
    std::ifstream f(dir / "evolution.csv");
    std::string line;
    int rows = -1;
    while (std::getline(f, line)) ++rows;
    EXPECT_EQ(rows, 501);
}

TEST(Pipeline, CompareWarnsOffRatio) {
    const auto dir = scratch("compare");
    auto cfg = parse_config({{"run", "compare"},
                             {"compare", {{"amplitudes", {0.01}}, {"f0_over_a", 250}}},
                             {"numerics", {{"steps_per_period", 216}}},
                             {"ensemble", {{"count", 40}}}},
                            Scale::ci);
    Pipeline p(cfg, dir);
    p.run();
    ASSERT_FALSE(p.warnings().empty());
    EXPECT_NE(p.warnings().front().find("f0/a"), std::string::npos);
    const auto cmp = json::parse(slurp(dir / "compare.json"));
    ASSERT_EQ(cmp["entries"].size(), 1u);
    EXPECT_DOUBLE_EQ(cmp["entries"][0]["f0"].get<double>(), 2.5);
    for (const char* k : {"a", "D_cl", "D_q", "ratio_q_over_cl"}) EXPECT_TRUE(cmp["entries"][0].contains(k)) << k;
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("spectrum --config " + (dir / "nope.json").string()), 2);

    auto bad = write_config(dir, {{"run", "spectrum"}, {"model", {{"k", 0.0}}}});
    EXPECT_EQ(run_cli("spectrum --config " + bad.string() + " --out " + (dir / "o").string()), 2);

    auto ok = write_config(dir, {{"run", "spectrum"}, {"scale", "ci"}});
    EXPECT_EQ(run_cli("evolve --config " + ok.string() + " --out " + (dir / "o").string()), 2);  // subcommand mismatch
    EXPECT_EQ(run_cli("spectrum --config " + ok.string() + " --out " + (dir / "o").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "o" / "spectrum.csv"));

    // tiny basis: the packet reaches the shell at once -> physics (truncation) error
    auto leak = write_config(dir, {{"run", "evolve"},
                                   {"scale", "ci"},
                                   {"truncation", {{"r_max", 3}, {"p_window", 3}, {"q_window", 1}}},
                                   {"initial_state", {{"s", "bottom"}}},
                                   {"numerics", {{"periods", 150}, {"warn_leakage", 1e-12}, {"abort_leakage", 1e-12}}}});
    EXPECT_EQ(run_cli("evolve --config " + leak.string() + " --out " + (dir / "o2").string()), 4);

    // unattainable unitarity tolerance -> numerical error
    auto tight = write_config(dir, {{"run", "qe"},
                                    {"scale", "ci"},
                                    {"truncation", {{"r_max", 3}, {"p_window", 3}, {"q_window", 1}}},
                                    {"numerics", {{"unitarity_tol", 1e-300}}}});
    EXPECT_EQ(run_cli("qe --config " + tight.string() + " --out " + (dir / "o3").string()), 3);
}

TEST(Cli, SeedOverrideIsDeterministic) {
    const auto dir = scratch("seed");
    auto cfg = write_config(dir, {{"run", "classical"},
                                  {"scale", "ci"},
                                  {"ensemble", {{"count", 12}, {"periods", 150}, {"poincare_trajectories", 2}, {"poincare_bounces", 100}}}});
    ASSERT_EQ(run_cli("classical --config " + cfg.string() + " --seed 7 --out " + (dir / "a").string()), 0);
    ASSERT_EQ(run_cli("classical --config " + cfg.string() + " --seed 7 --out " + (dir / "b").string()), 0);
    ASSERT_EQ(run_cli("classical --config " + cfg.string() + " --seed 8 --out " + (dir / "c").string()), 0);
    for (const char* f : {"classical.csv", "poincare.csv", "summary.json", "manifest.json"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_NE(slurp(dir / "a" / "classical.csv"), slurp(dir / "c" / "classical.csv"));
    EXPECT_EQ(json::parse(slurp(dir / "a" / "manifest.json"))["seed"], 7);
}

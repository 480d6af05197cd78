#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "kerrsq/harness.hpp"

using namespace kerrsq;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fast configuration for sweep plumbing tests: the Current set finishes in well
// under a second per point.
Parameters quick() { return current_set(); }

} // namespace

TEST(Parameters, NamedSetsAreVerbatim) {
    const Parameters c = current_set();
    EXPECT_EQ(c, (Parameters{0.5, 0.5, 0.02, 0.3, 0.1, 2e-5, 50.0, 50.0}));
    EXPECT_EQ(achievable_set(), (Parameters{0.5, 0.5, 0.01, 0.3, 0.001, 2e-5, 70.0, 70.0}));
    EXPECT_EQ(optimistic_set(), (Parameters{0.5, 0.5, 0.01, 0.3, 0.0001, 2e-5, 70.0, 70.0}));
    EXPECT_EQ(named_set("optimally-achievable"), achievable_set());
    EXPECT_THROW(named_set("pessimistic"), config_error);
}

TEST(Parameters, Validation) {
    for (const char* name : {"eta", "nu", "p_dark"}) {
        Parameters p = optimistic_set();
        parameter_ref(p, name) = 1.5;
        EXPECT_THROW(p.validate(), config_error) << name;
    }
    Parameters p = optimistic_set();
    p.epsilon = 0.0;
    EXPECT_THROW(p.validate(), config_error);
    p = optimistic_set();
    p.delta_phi = M_PI;
    EXPECT_THROW(p.validate(), config_error);
    p = optimistic_set();
    p.beta = -1.0;
    EXPECT_THROW(p.validate(), config_error);
    p = optimistic_set();
    p.beta = 500.0; // any size is accepted
    EXPECT_NO_THROW(p.validate());
    EXPECT_THROW(parameter_value(p, "kappa"), config_error);
}

TEST(Config, ParsesLayeredKeys) {
    const Config c = parse_config("# comment\nset = achievable\n  eta = 0.7   # inline\n\ndelta_re = 1.5\ngamma = 40\n");
    Parameters expected = achievable_set();
    expected.eta = 0.7;
    EXPECT_EQ(c.params, expected);
    ASSERT_TRUE(c.options.delta.has_value());
    EXPECT_EQ(*c.options.delta, complex(1.5, 0.0));
    EXPECT_EQ(c.options.gamma, 40.0);
}

TEST(Config, Errors) {
    EXPECT_THROW(parse_config("eta 0.5\n"), config_error);
    EXPECT_THROW(parse_config("eta = half\n"), config_error);
    EXPECT_THROW(parse_config("eta = 0.5x\n"), config_error);
    EXPECT_THROW(parse_config("colour = red\n"), config_error);
    EXPECT_THROW(parse_config("set = nonsense\n"), config_error);
    EXPECT_THROW(parse_config("nu = -0.1\n"), config_error);
    EXPECT_THROW(load_config("/nonexistent/path.cfg"), config_error);
}

TEST(Config, ShippedFiles) {
    const std::filesystem::path dir = KERRSQ_CONFIG_DIR;
    EXPECT_EQ(load_config((dir / "optimistic.cfg").string()).params, optimistic_set());
    EXPECT_EQ(load_config((dir / "current.cfg").string()).params, current_set());
    const Config v = load_config((dir / "oracle_validation.cfg").string());
    EXPECT_NEAR(v.params.alpha * v.params.beta * v.params.phi0, 70.0 * 70.0 * 2e-5, 1e-12);
    EXPECT_THROW(load_config((std::filesystem::path(KERRSQ_TEST_DATA_DIR) / "invalid.cfg").string()), config_error);
}

TEST(Config, ValueLists) {
    EXPECT_EQ(parse_value_list("0.1, 0.2,0.5", "v"), (std::vector<double>{0.1, 0.2, 0.5}));
    EXPECT_EQ(parse_value_list("0:1:5", "v"), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
    const auto g = parse_value_list("0.001:10:5:log", "v");
    ASSERT_EQ(g.size(), 5u);
    EXPECT_NEAR(g[2], 0.1, 1e-15);
    EXPECT_THROW(parse_value_list("0:1", "v"), config_error);
    EXPECT_THROW(parse_value_list("0:1:2.5", "v"), config_error);
    EXPECT_THROW(parse_value_list("1,,2", "v"), config_error);
    EXPECT_THROW(parse_value_list("0:1:3:log", "v"), config_error);
}

TEST(Pipeline, NoInteractionGivesCoherentState) {
    const Parameters p{1.0, 1.0, 0.0, 0.3, 0.0, 0.0, 5.0, 4.0};
    const PipelineResult r = run_pipeline(p);
    EXPECT_LT((r.signal.cov - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(r.signal.mean(0), 8.0, 1e-10);
    EXPECT_NEAR(g2_click(r.signal, 0.0), 1.0, 1e-10);
    const DisplacementOptimum o = optimize_displacement(r.signal, 0.0);
    EXPECT_NEAR(o.g2_min, 1.0, 1e-6);
}

TEST(Pipeline, DefaultBinCenter) {
    const Parameters p = optimistic_set();
    const complex d = default_postselection_center(p);
    EXPECT_NEAR(std::abs(d), std::sqrt(0.5) * 70.0, 1e-12);
    EXPECT_NEAR(std::arg(d), -std::remainder(2e-5 * 4900.0, 2.0 * M_PI), 1e-12);
    const HeterodyneSettings h = heterodyne_settings(p, {});
    EXPECT_NEAR(h.width(), 0.38891, 1e-5);
}

TEST(Pipeline, OptimisticSuccessProbability) {
    const PipelineResult r = run_pipeline(optimistic_set());
    EXPECT_NEAR(r.success_prob, 0.1519, 1e-3);
    EXPECT_EQ(r.cutoff, fock_cutoff(70.0));
}

TEST(Pipeline, WiderEnvelopeWashesOutSqueezing) {
    const Parameters p = optimistic_set();
    PipelineOptions base;
    const double g2_base = optimize_displacement(run_pipeline(p, base).signal, p.p_dark).g2_min;
    // gamma chosen so that the envelope width doubles
    const double Delta = 2.0 * heterodyne_settings(p, base).width();
    PipelineOptions wide;
    wide.gamma = std::sqrt(Delta * Delta - p.epsilon * p.epsilon) / std::tan(0.5 * p.delta_phi);
    EXPECT_NEAR(heterodyne_settings(p, wide).width(), Delta, 1e-12);
    const double g2_wide = optimize_displacement(run_pipeline(p, wide).signal, p.p_dark).g2_min;
    EXPECT_LT(g2_base, g2_wide);
    EXPECT_LT(g2_wide, 1.0);
}

TEST(Pipeline, DenseGateRefusesLargeCutoffs) {
    EXPECT_THROW(run_pipeline_dense(optimistic_set()), config_error);
    PipelineOptions opt;
    opt.dense_limit_bytes = 1;
    Parameters small = optimistic_set();
    small.alpha = small.beta = 2.0;
    EXPECT_THROW(run_pipeline_dense(small, opt), config_error);
    opt.allow_large = true;
    EXPECT_NO_THROW(run_pipeline_dense(small, opt));
}

TEST(Pipeline, OracleAgreesAtValidationScale) {
    Parameters p = optimistic_set();
    p.alpha = p.beta = 6.0;
    p.phi0 = 0.098 / 36.0;
    const PointResult g = evaluate_point(p, PipelineVariant::gaussian);
    const PointResult f = evaluate_point(p, PipelineVariant::fock_oracle);
    EXPECT_NEAR(f.optimum.g2_min / g.optimum.g2_min, 1.0, 0.05);
    EXPECT_NEAR(f.success_prob, g.success_prob, 1e-15);
}

TEST(Sweep, RejectsBadSpecs) {
    EXPECT_THROW(sweep(quick(), {"temperature", {1.0}}), config_error);
    EXPECT_THROW(sweep(quick(), {"eta", {}}), config_error);
    EXPECT_THROW(sweep(quick(), {"displacement", {0.0}}), config_error);
    SweepResult empty;
    EXPECT_THROW(to_csv(empty), config_error);
}

TEST(Sweep, RowsInInputOrderWithCurves) {
    const std::vector<double> grid{0.05, 0.2, 0.8};
    const SweepResult r = sweep(quick(), {"eta", {0.7, 0.3, 0.5}}, grid, PipelineVariant::gaussian, {}, 2);
    ASSERT_EQ(r.rows.size(), 3u * 4u);
    EXPECT_EQ(r.rows[0].swept_value, 0.7);
    EXPECT_TRUE(r.rows[0].optimum);
    EXPECT_FALSE(r.rows[1].optimum);
    EXPECT_EQ(r.rows[1].n_displacement, 0.05);
    EXPECT_EQ(r.rows[4].swept_value, 0.3);
    EXPECT_EQ(r.rows[8].swept_value, 0.5);
    EXPECT_EQ(r.optima().size(), 3u);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.swept_name, "eta");
        EXPECT_GT(row.g2, 0.0);
        EXPECT_GE(row.success_prob, 0.0);
        EXPECT_LE(row.success_prob, 1.0);
    }
    // curve points never beat the optimum
    for (std::size_t i = 0; i < r.rows.size(); i += 4)
        for (std::size_t k = 1; k < 4; ++k) EXPECT_GE(r.rows[i + k].g2, r.rows[i].g2 - 1e-12);
}

TEST(Sweep, DisplacementCurve) {
    const SweepResult r = sweep(quick(), {"displacement", {0.05, 0.18, 0.5}});
    ASSERT_EQ(r.rows.size(), 4u);
    EXPECT_TRUE(r.rows[0].optimum);
    for (std::size_t i = 1; i < 4; ++i) {
        EXPECT_EQ(r.rows[i].swept_name, "displacement");
        EXPECT_EQ(r.rows[i].swept_value, r.rows[i].n_displacement);
    }
}

TEST(Sweep, DeterministicBytes) {
    const SweepSpec spec{"p_dark", {0.1, 0.01, 0.001}};
    const std::vector<double> grid{0.1, 0.3};
    const std::string a = to_csv(sweep(quick(), spec, grid, PipelineVariant::gaussian, {}, 1));
    const std::string b = to_csv(sweep(quick(), spec, grid, PipelineVariant::gaussian, {}, 3));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.substr(0, a.find('\n')), "swept_name,swept_value,n_displacement,g2,success_prob,optimum");
}

TEST(Emit, JsonRoundTripIsExact) {
    SweepResult r = sweep(quick(), {"epsilon", {0.2, 0.4}}, {0.1});
    r.metadata.wall_time_s = 0.123456789012345678;
    const SweepResult back = sweep_result_from_json(nlohmann::json::parse(render(r, OutputFormat::json)));
    EXPECT_EQ(back, r);
    EXPECT_EQ(back.metadata.params, quick());
    EXPECT_EQ(back.metadata.version, KERRSQ_VERSION);
}

TEST(Emit, WritesFiles) {
    const SweepResult r = sweep(quick(), {"nu", {0.5}});
    const auto dir = std::filesystem::temp_directory_path() / "kerrsq_emit_test";
    std::filesystem::create_directories(dir);
    emit(r, OutputFormat::csv, (dir / "r.csv").string());
    EXPECT_EQ(slurp(dir / "r.csv"), to_csv(r));
    emit(r, OutputFormat::json, (dir / "r.json").string());
    EXPECT_EQ(sweep_result_from_json(nlohmann::json::parse(slurp(dir / "r.json"))), r);
    EXPECT_THROW(emit(r, OutputFormat::csv, "/nonexistent/dir/r.csv"), std::runtime_error);
    EXPECT_THROW(format_from_string("xml"), config_error);
    std::filesystem::remove_all(dir);
}

#ifdef KERRSQ_CLI_PATH

namespace {

int cli(const std::string& args) {
    const std::string cmd = std::string(KERRSQ_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& name) { return (std::filesystem::path(KERRSQ_CONFIG_DIR) / name).string(); }

} // namespace

TEST(Cli, ExitCodes) {
    EXPECT_EQ(cli("selftest"), 0);
    EXPECT_EQ(cli("run --set current"), 0);
    EXPECT_EQ(cli(""), 2);
    EXPECT_EQ(cli("frobnicate"), 2);
    EXPECT_EQ(cli("run --set nonsense"), 2);
    EXPECT_EQ(cli("run --set current --eta 1.5"), 2);
    EXPECT_EQ(cli("run --set current --format xml"), 2);
    EXPECT_EQ(cli("run --config " + (std::filesystem::path(KERRSQ_TEST_DATA_DIR) / "invalid.cfg").string()), 2);
    EXPECT_EQ(cli("sweep --set current --name temperature --values 1"), 2);
    EXPECT_EQ(cli("run --set optimistic --oracle"), 2);
    EXPECT_EQ(cli("run --set current --delta-re 1e4"), 3);
}

TEST(Cli, SweepOutputIsDeterministic) {
    const auto dir = std::filesystem::temp_directory_path() / "kerrsq_cli_test";
    std::filesystem::create_directories(dir);
    const std::string args = "sweep --config " + config("current.cfg") + " --name eta --values 0.3,0.7 --grid 0.1:0.5:3";
    ASSERT_EQ(cli(args + " --threads 1 --out " + (dir / "a.csv").string()), 0);
    ASSERT_EQ(cli(args + " --threads 2 --out " + (dir / "b.csv").string()), 0);
    const std::string a = slurp(dir / "a.csv");
    EXPECT_EQ(a, slurp(dir / "b.csv"));
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 2 * 4);
    std::filesystem::remove_all(dir);
}

TEST(Cli, JsonOutputs) {
    const auto dir = std::filesystem::temp_directory_path() / "kerrsq_cli_json";
    std::filesystem::create_directories(dir);
    ASSERT_EQ(cli("twopeak --format json --out " + (dir / "t.json").string()), 0);
    const auto t = nlohmann::json::parse(slurp(dir / "t.json"));
    EXPECT_EQ(t.at("separation").get<int>(), 16);
    ASSERT_EQ(cli("run --config " + config("oracle_validation.cfg") + " --oracle --format json --out " +
                  (dir / "r.json").string()),
              0);
    const auto r = nlohmann::json::parse(slurp(dir / "r.json"));
    EXPECT_EQ(r.at("variant").get<std::string>(), "fock-oracle");
    EXPECT_GT(r.at("optimum").at("g2_min").get<double>(), 0.0);
    ASSERT_EQ(cli("wigner --points 81 --format json --out " + (dir / "w.json").string()), 0);
    const auto w = nlohmann::json::parse(slurp(dir / "w.json"));
    EXPECT_LT(w.at("min").get<double>(), 0.0);
    ASSERT_EQ(cli("optomech --times 0,1.5707963267948966 --omega 2 --g 1 --format json --out " +
                  (dir / "o.json").string()),
              0);
    const auto o = nlohmann::json::parse(slurp(dir / "o.json"));
    EXPECT_NEAR(o.at("rows").at(1).at("kappa").get<double>(), 2.0, 1e-15);
    std::filesystem::remove_all(dir);
}

#endif

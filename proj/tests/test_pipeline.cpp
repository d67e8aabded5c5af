#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "milne.hpp"

using namespace milne;
namespace fs = std::filesystem;

namespace {

std::string small_config(double psi_b) {
    return R"({
  "T_b": 1.0,
  "psi_b": {"constant": )" +
           io::format_double(psi_b) + R"(},
  "B_schedule": [4, 8, 12],
  "grid": {"nx": 241, "nmu": 8},
  "alpha": [0.25, 0.5],
  "beta": [0.25],
  "linearized": {"B": 3},
  "rayleigh": {"K": 5, "random": 5},
  "output_dir": "out"
})";
}

class Scratch : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / (std::string("milne_pipeline_") + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    RunConfig config(double psi_b, const std::string& sub) {
        auto c = parse_config(small_config(psi_b), dir);
        c.output_dir = dir / sub;
        return c;
    }
};

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ParseConfig, Defaults) {
    const auto c = parse_config(R"({"T_b": 1, "psi_b": 0.5})", "/base");
    EXPECT_EQ(c.nx, 401u);
    EXPECT_EQ(c.nmu, 16u);
    EXPECT_EQ(c.output_dir, fs::path("/base/out"));
    EXPECT_EQ(c.seed, 12345u);
    EXPECT_FALSE(c.boundary().is_well_prepared(Grid(1.0, 5, 16)));
}

TEST(ParseConfig, ErrorsNameTheField) {
    EXPECT_EQ(error_of(R"({"psi_b": 1})"), "config: missing required field 'T_b'");
    EXPECT_EQ(error_of(R"({"T_b": 1})"), "config: missing required field 'psi_b'");
    EXPECT_NE(error_of("{\"T_b\": 1,\n \"psi_b\": 1,\n \"nxx\": 3}").find("'nxx' (line 3): unknown field"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"T_b": 1, "psi_b": 1, "alpha": [0.5, 1.0]})").find("'alpha'"), std::string::npos);
    EXPECT_NE(error_of(R"({"T_b": 1, "psi_b": 1, "B_schedule": [5, 4, 10]})").find("must be increasing"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"T_b": 1, "psi_b": 1, "grid": {"nmu": 15}})").find("'nmu'"), std::string::npos);
    EXPECT_NE(error_of(R"({"T_b": 1, "psi_b": -1})").find("'psi_b'"), std::string::npos);
    EXPECT_NE(error_of(R"({"T_b": 1, "psi_b": 1, "linearized": {"phi_b": {"tabulated": [1, 2]}}})").find("'phi_b'"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"T_b": -1, "psi_b": 1})").find("'T_b'"), std::string::npos);
    EXPECT_NE(error_of("{not json").find("malformed JSON"), std::string::npos);
    EXPECT_NE(error_of(R"({"T_b": 1, "psi_b": 1, "schema_version": 2})").find("'schema_version'"), std::string::npos);
}

TEST(ParseConfig, ProfileForms) {
    Grid g(1.0, 5, 4);
    const auto p = parse_config(R"({"T_b": 1, "psi_b": {"polynomial": [1, 0, 1]}})").psi_b.values(g);
    EXPECT_NEAR(p[1], 1.0 + g.mu()[g.pos(1)] * g.mu()[g.pos(1)], 1e-15);
    const auto t = parse_config(R"({"T_b": 1, "psi_b": {"tabulated": [0.5, 0.7]}, "grid": {"nmu": 4}})").psi_b.values(g);
    EXPECT_EQ(t, (std::vector<double>{0.5, 0.7}));
}

TEST_F(Scratch, RunThenVerify) {
    const auto c = config(0.5, "run");
    const auto r = run_pipeline(c);
    ASSERT_EQ(r.exit_code, exit_ok) << ::testing::PrintToString(r.failed_checks);
    for (const char* f : {"report.json", "profiles.csv", "decay.csv"}) EXPECT_TRUE(fs::exists(c.output_dir / f)) << f;
    EXPECT_EQ(r.report["schema_version"], kReportSchemaVersion);
    EXPECT_EQ(r.report["status"], "ok");
    EXPECT_TRUE(r.report["pass"].get<bool>());
    EXPECT_NEAR(r.report["boundary"]["gap"].get<double>(), 1.0 / 16.0, 1e-15);

    const auto v = verify_pipeline(c, c.output_dir);
    EXPECT_EQ(v.exit_code, exit_ok) << ::testing::PrintToString(v.violations);

    const auto prof = io::read_csv(io::read_file((c.output_dir / "profiles.csv").string()));
    EXPECT_EQ(prof.header, (std::vector<std::string>{"x", "T", "dT_dx", "bracket_psi", "bracket_mu_psi"}));
    EXPECT_EQ(prof.col("x").size(), 241u);
}

TEST_F(Scratch, CorruptedProfileFailsVerification) {
    const auto c = config(0.5, "run");
    ASSERT_EQ(run_pipeline(c).exit_code, exit_ok);
    const auto path = (c.output_dir / "profiles.csv").string();
    auto t = io::read_csv(io::read_file(path));
    const std::size_t col = 1;
    for (auto& row : t.rows) row[col] *= 1.01;
    io::write_file(path, io::write_csv(t));
    const auto v = verify_pipeline(c, c.output_dir);
    EXPECT_EQ(v.exit_code, exit_verification);
    bool flux = false;
    for (const auto& s : v.violations) flux = flux || s.find("flux identity") != std::string::npos;
    EXPECT_TRUE(flux) << ::testing::PrintToString(v.violations);
}

TEST_F(Scratch, UnknownSchemaVersionIsInputError) {
    const auto c = config(0.5, "run");
    ASSERT_EQ(run_pipeline(c).exit_code, exit_ok);
    const auto path = (c.output_dir / "report.json").string();
    auto rep = io::ojson::parse(io::read_file(path));
    rep["schema_version"] = 99;
    io::write_file(path, io::dump(rep));
    EXPECT_EQ(verify_pipeline(c, c.output_dir).exit_code, exit_config);
    EXPECT_EQ(verify_pipeline(c, dir / "missing").exit_code, exit_config);
}

TEST_F(Scratch, DeterministicReports) {
    const auto a = config(0.5, "a"), b = config(0.5, "b");
    ASSERT_EQ(run_pipeline(a).exit_code, exit_ok);
    ASSERT_EQ(run_pipeline(b).exit_code, exit_ok);
    for (const char* f : {"report.json", "profiles.csv", "decay.csv"})
        EXPECT_EQ(io::read_file((a.output_dir / f).string()), io::read_file((b.output_dir / f).string())) << f;
}

TEST_F(Scratch, WellPreparedReport) {
    const auto c = config(1.0, "wp");
    const auto r = run_pipeline(c);
    EXPECT_EQ(r.exit_code, exit_ok) << ::testing::PrintToString(r.failed_checks);
    EXPECT_TRUE(r.report["boundary"]["well_prepared"].get<bool>());
    EXPECT_NEAR(r.report["T_inf"].get<double>(), 1.0, 1e-9);
    EXPECT_EQ(verify_pipeline(c, c.output_dir).exit_code, exit_ok);
}

TEST(IoFormat, RoundTripsDoubles) {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0})
        EXPECT_EQ(io::parse_double(io::format_double(v)), v);
}

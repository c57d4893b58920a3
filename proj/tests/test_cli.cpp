// End-to-end runs of the command line tool. Every case writes a small config
// into a scratch directory and checks the exit status and the files written.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "thinhom/io.hpp"

namespace fs = std::filesystem;
using thinhom::Json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("thinhom_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const std::string& name, const Json& j) const {
        const fs::path p = dir_ / (name + ".json");
        std::ofstream(p) << j.dump(2);
        return p;
    }

    // Runs the tool with stdout and stderr captured; returns the exit status.
    int run(const std::string& args) {
        const fs::path log = dir_ / "log.txt";
        const std::string cmd = std::string("\"") + THINHOM_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
        const int status = std::system(cmd.c_str());
        output_ = slurp(log);
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    int run(const std::string& command, const fs::path& config, const fs::path& out, const std::string& extra = "") {
        return run(command + " --config \"" + config.string() + "\" --out \"" + out.string() + "\" " + extra);
    }

    fs::path dir_;
    std::string output_;
};

Json quick_weakweak() {
    return {{"profile", {{"name", "cos_cos"}}},
            {"alpha", 0.5},
            {"beta", 0.75},
            {"source", {{"kind", "cos_cos"}, {"k1", 1}, {"k2", 1}}},
            {"epsilons", {0.2}},
            {"mesh", {{"hom_n", 16}, {"cells_per_period", 4}, {"nz", 2}}}};
}

Json quick_resonant() {
    return {{"profile", {{"name", "sin_y2"}}},
            {"alpha", 0.5},
            {"beta", 1.0},
            {"epsilons", {0.2}},
            {"mesh", {{"cell_n_h", 16}, {"cell_n_v", 16}, {"n_y1", 4}, {"hom_n", 16}}}};
}

} // namespace

TEST_F(Cli, ProfilesListing) {
    EXPECT_EQ(run("profiles"), 0);
    EXPECT_NE(output_.find("cos_cos"), std::string::npos);
    EXPECT_NE(output_.find("defaults:"), std::string::npos);
    EXPECT_EQ(run("profiles --json"), 0);
    const Json j = Json::parse(output_);
    ASSERT_TRUE(j.is_array());
    EXPECT_GE(j.size(), 8u);
}

TEST_F(Cli, UsageErrorsAreConfigErrors) {
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("coeffs"), 1); // --config is required
    EXPECT_EQ(run("frobnicate --config x.json"), 1);
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("--version"), 0);
    EXPECT_NE(output_.find("1.0.0"), std::string::npos);
}

TEST_F(Cli, ConfigErrorsExitOne) {
    EXPECT_EQ(run("coeffs", dir_ / "missing.json", dir_ / "out"), 1);
    std::ofstream(dir_ / "broken.json") << "{ \"alpha\": 0.5,";
    EXPECT_EQ(run("coeffs", dir_ / "broken.json", dir_ / "out"), 1);
    Json j = quick_weakweak();
    j["mesh"]["hom_m"] = 8;
    EXPECT_EQ(run("solve", write_config("typo", j), dir_ / "out"), 1);
    EXPECT_NE(output_.find("unknown key 'hom_m'"), std::string::npos);
    j = quick_weakweak();
    j["epsilons"] = {0.0};
    EXPECT_EQ(run("solve", write_config("eps", j), dir_ / "out"), 1);
    j = quick_weakweak();
    j["source"] = {{"kind", "manufactured"}};
    EXPECT_EQ(run("validate", write_config("manufactured", j), dir_ / "out"), 1);
    EXPECT_FALSE(fs::exists(dir_ / "out" / "validation.json"));
}

TEST_F(Cli, UnsupportedRegimeExitsTwo) {
    Json j = quick_weakweak();
    j["alpha"] = 0.75;
    for (const char* cmd : {"coeffs", "solve", "validate", "unfold-check"}) {
        EXPECT_EQ(run(cmd, write_config("equal", j), dir_ / "out"), 2) << cmd;
        EXPECT_NE(output_.find("alpha < beta"), std::string::npos) << cmd;
    }
    j["alpha"] = 1.0;
    EXPECT_EQ(run("coeffs", write_config("above", j), dir_ / "out"), 2);
}

TEST_F(Cli, SolverFailureExitsThree) {
    Json j = quick_weakweak();
    j["tolerances"] = {{"unfold", 1e-300}};
    EXPECT_EQ(run("unfold-check", write_config("strict", j), dir_ / "out"), 3);
    const Json r = Json::parse(slurp(dir_ / "out" / "unfold.json"));
    EXPECT_FALSE(r["pass"].get<bool>());
}

TEST_F(Cli, BudgetExitsFourBeforeSolving) {
    const fs::path cfg = fs::path(THINHOM_CONFIG_DIR) / "budget.json";
    EXPECT_EQ(run("validate", cfg, dir_ / "out"), 4);
    EXPECT_NE(output_.find("3072000"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "out" / "validation.json"));
}

TEST_F(Cli, CoeffsClosedFormAndResonant) {
    EXPECT_EQ(run("coeffs", write_config("ww", quick_weakweak()), dir_ / "ww"), 0);
    const Json w = Json::parse(slurp(dir_ / "ww" / "coeffs.json"));
    EXPECT_EQ(w["regime"], "WeakWeak");
    EXPECT_EQ(w["command"], "coeffs");
    EXPECT_EQ(w["version"], "1.0.0");
    EXPECT_EQ(w["config_hash"].get<std::string>().size(), 16u);

    EXPECT_EQ(run("coeffs", write_config("rw", quick_resonant()), dir_ / "rw", "--serial --verbose"), 0);
    EXPECT_NE(output_.find("regime ResonantWeak"), std::string::npos);
    const Json r = Json::parse(slurp(dir_ / "rw" / "coeffs.json"));
    EXPECT_EQ(r["regime"], "ResonantWeak");
    // The slice is y1-independent, so the resonant direction is exact.
    EXPECT_NEAR(r["q1"].get<double>(), 1.0, 1e-6);
    for (const char* f : {"slices.csv", "coefficients.csv"}) {
        const std::string csv = slurp(dir_ / "rw" / f);
        EXPECT_EQ(csv.rfind("# thinhom 1.0.0 config " + r["config_hash"].get<std::string>(), 0), 0u) << f;
    }
}

TEST_F(Cli, SolveWritesFieldsAndConvergence) {
    EXPECT_EQ(run("solve", write_config("ww", quick_weakweak()), dir_ / "out"), 0);
    for (const char* f : {"u_hom.vtk", "u_hom.csv", "summary.json", "convergence.csv"})
        EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
    const std::string vtk = slurp(dir_ / "out" / "u_hom.vtk");
    EXPECT_EQ(vtk.rfind("# vtk DataFile Version 3.0\n", 0), 0u);
    EXPECT_NE(vtk.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
    // A polynomial source has no closed-form solution, so no convergence table.
    Json j = quick_weakweak();
    j["source"] = {{"kind", "polynomial"}, {"terms", {{1.0, 1, 0}}}};
    EXPECT_EQ(run("solve", write_config("poly", j), dir_ / "poly"), 0);
    EXPECT_TRUE(fs::exists(dir_ / "poly" / "summary.json"));
    EXPECT_FALSE(fs::exists(dir_ / "poly" / "convergence.csv"));
}

TEST_F(Cli, ValidateWritesReport) {
    Json j = quick_weakweak();
    j["write_3d_vtk"] = true;
    EXPECT_EQ(run("validate", write_config("ww", j), dir_ / "out"), 0);
    const Json v = Json::parse(slurp(dir_ / "out" / "validation.json"));
    EXPECT_EQ(v["command"], "validate");
    EXPECT_TRUE(fs::exists(dir_ / "out" / "validation.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "u_direct.vtk"));
}

TEST_F(Cli, UnfoldCheckSampleConfig) {
    EXPECT_EQ(run("unfold-check", fs::path(THINHOM_CONFIG_DIR) / "unfold.json", dir_ / "out"), 0);
    const Json r = Json::parse(slurp(dir_ / "out" / "unfold.json"));
    EXPECT_TRUE(r["pass"].get<bool>());
    EXPECT_FALSE(r["checks"].empty());
}

TEST_F(Cli, SerialRunsAreByteIdentical) {
    const fs::path cfg = write_config("rw", quick_resonant());
    for (const char* cmd : {"coeffs", "solve"}) {
        ASSERT_EQ(run(cmd, cfg, dir_ / "a", "--serial"), 0) << cmd;
        ASSERT_EQ(run(cmd, cfg, dir_ / "b", "--serial"), 0) << cmd;
    }
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "a")) {
        const fs::path other = dir_ / "b" / e.path().filename();
        ASSERT_TRUE(fs::exists(other)) << other;
        EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
        ++files;
    }
    EXPECT_GE(files, 6);
}

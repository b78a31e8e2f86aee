#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string output;
};

fs::path scratch() {
    const fs::path p = fs::temp_directory_path() / ("gradgap_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
}

Result run(const std::string& args) {
    const fs::path log = scratch() / "stdout.txt";
    const std::string cmd = std::string(GRADGAP_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> column(const fs::path& csv, std::size_t col) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<double> out;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t i = 0; i <= col; ++i)
            std::getline(ss, cell, ',');
        out.push_back(std::stod(cell));
    }
    return out;
}

}  // namespace

TEST(Cli, Thm33RunWritesDecreasingTrace) {
    const auto cfg = write_config("thm33.json", R"({"kind": "thm33", "g": 2, "eta": 0.1, "horizon": 200})");
    const fs::path out = scratch() / "thm33";
    const auto r = run("run --config " + cfg.string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const auto j = column(out / "trace.csv", 1);
    ASSERT_EQ(j.size(), 201u);
    for (std::size_t k = 1; k < j.size(); ++k)
        EXPECT_LT(j[k], j[k - 1]);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest.at("command"), "run");
    EXPECT_EQ(manifest.at("config_digest").get<std::string>().size(), 16u);
    for (const auto& f : manifest.at("outputs"))
        EXPECT_TRUE(fs::exists(f.get<std::string>()));
    EXPECT_EQ(manifest.at("summary").at("diverged"), false);
}

TEST(Cli, ZeroStepKeepsValueConstant) {
    const auto cfg = write_config("zero.json", R"({
      "kind": "dynamics",
      "instance": {"prompt_id": "p", "dimension": 1,
                   "responses": [{"id": "a", "features": [1.0], "positive": true},
                                 {"id": "b", "features": [-1.0], "positive": false}]},
      "theta0": [0.25],
      "rule": {"kind": "prescribed", "prescribed_name": "constant", "direction": [1.0], "eta": 0.0},
      "horizon": 20
    })");
    const fs::path out = scratch() / "zero";
    ASSERT_EQ(run("run --config " + cfg.string() + " --out " + out.string()).code, 0);
    const auto j = column(out / "trace.csv", 1);
    for (double v : j)
        EXPECT_EQ(v, j.front());
}

TEST(Cli, MissingFieldExitsTwoAndNamesIt) {
    const auto cfg = write_config("missing.json", R"({"kind": "thm33", "g": 2, "horizon": 10})");
    const auto r = run("run --config " + cfg.string() + " --out " + (scratch() / "m").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("'eta'"), std::string::npos) << r.output;
}

TEST(Cli, MalformedJsonReportsLine) {
    const auto cfg = write_config("bad.json", "{\n  \"kind\": \"thm33\",\n  oops\n}");
    const auto r = run("run --config " + cfg.string() + " --out " + (scratch() / "b").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("line 3"), std::string::npos) << r.output;
}

TEST(Cli, CheckSuites) {
    const fs::path out = scratch() / "check";
    const auto r = run("check --suite identity --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("identity: 200 reports, 0 failures"), std::string::npos) << r.output;
    std::ifstream in(out / "check_identity.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        EXPECT_TRUE(nlohmann::json::parse(line).at("satisfied").get<bool>());
        ++lines;
    }
    EXPECT_EQ(lines, 200);
    EXPECT_EQ(run("check --suite taylor --out " + out.string()).code, 0);
    EXPECT_EQ(run("check --suite nonsense --out " + out.string()).code, 2);
}

TEST(Cli, SweepOneThresholdPerLengthAndDeterministic) {
    const auto cfg = write_config("sweep.json", R"({
      "family": "token_lb", "eta_grid": {"lo_exp": -8, "hi_exp": 3}, "t_infs": [2, 4, 8, 16], "horizon": 200})");
    const fs::path a = scratch() / "sweep_a", b = scratch() / "sweep_b";
    ASSERT_EQ(run("sweep --config " + cfg.string() + " --out " + a.string()).code, 0);
    ASSERT_EQ(run("sweep --config " + cfg.string() + " --out " + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "sweep.csv"), slurp(b / "sweep.csv"));
    EXPECT_EQ(slurp(a / "thresholds.csv"), "t_inf,eta_star\n2,1\n4,0.5\n8,0.25\n16,0.125\n");
}

TEST(Cli, EmptyEtaGridExitsTwo) {
    const auto cfg = write_config("empty.json", R"({"family": "token_lb", "etas": [], "t_infs": [2]})");
    EXPECT_EQ(run("sweep --config " + cfg.string() + " --out " + (scratch() / "e").string()).code, 2);
}

TEST(Cli, FlagsOverrideConfig) {
    const auto cfg = write_config("ctx.json", R"({"kind": "contextual", "d": 3, "n_arms": 4, "horizon": 30,
      "pool_size": 5, "eval_size": 6, "seed": 1})");
    const fs::path a = scratch() / "ctx_a", b = scratch() / "ctx_b", c = scratch() / "ctx_c";
    ASSERT_EQ(run("run --config " + cfg.string() + " --out " + a.string()).code, 0);
    ASSERT_EQ(run("run --config " + cfg.string() + " --seed 1 --out " + b.string()).code, 0);
    ASSERT_EQ(run("run --config " + cfg.string() + " --seed 2 --stride 5 --out " + c.string()).code, 0);
    EXPECT_EQ(slurp(a / "contextual_trace.csv"), slurp(b / "contextual_trace.csv"));
    EXPECT_NE(slurp(a / "contextual_trace.csv"), slurp(c / "contextual_trace.csv"));
    const auto m = nlohmann::json::parse(slurp(c / "manifest.json"));
    EXPECT_EQ(m.at("seed"), 2);
    EXPECT_EQ(m.at("config").at("stride"), 5);
}

TEST(Cli, BuildInstanceRoundTripsThroughRun) {
    const auto cfg = write_config("bi.json", R"({"builder": "thm44", "g": 2, "eta": 0.05, "t_inf": 4})");
    const fs::path out = scratch() / "bi";
    ASSERT_EQ(run("build-instance --config " + cfg.string() + " --out " + out.string()).code, 0);
    const auto run_cfg = write_config("bi_run.json", R"({"kind": "dynamics", "instance_path": ")" +
                                                          (out / "instance.json").string() + R"(",
      "theta0": [0.0, 0.0], "rule": {"kind": "reinforce", "alpha": 0.1}, "horizon": 20})");
    EXPECT_EQ(run("run --config " + run_cfg.string() + " --out " + (scratch() / "bi_run").string()).code, 0);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("run").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

#include "support.hpp"

#include "driftfilter/config.hpp"
#include "driftfilter/experiments.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace driftfilter;
using namespace testing;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = DRIFTFILTER_CONFIG_DIR;

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& tag) : path(fs::temp_directory_path() / ("driftfilter-test-" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json base_json() { return nlohmann::json::parse(slurp(kConfigs / "example61.json")); }

std::string config_error(const nlohmann::json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

int cli(const std::string& args) {
    const std::string cmd = std::string(DRIFTFILTER_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("bundled configurations") {
    const ExperimentConfig c62 = load_config(kConfigs / "example62.json");
    CHECK((c62.model.sigma.row(0) - vec({0.30, 0.08, 0.05}).transpose()).norm() < 1e-15);
    CHECK(c62.model.m0 == c62.model.delta);
    CHECK(c62.ns == std::vector<int>{0, 10, 100, 1000, 10000});

    const ExperimentConfig c45 = load_config(kConfigs / "example45.json");
    CHECK(c45.schedule.kind == ScheduleSpec::Kind::Spacing);
    CHECK(c45.schedule.spacing == 1.0);

    const ExperimentConfig c46 = load_config(kConfigs / "example46.json");
    CHECK(c46.schedule.spacing == 0.5);

    for (const auto& entry : fs::directory_iterator(kConfigs)) {
        CAPTURE(entry.path().string());
        const ExperimentConfig c = load_config(entry.path());
        CHECK_FALSE(c.source.empty());
        CHECK_FALSE(c.experiment.empty());
        CHECK(std::find(experiment_names().begin(), experiment_names().end(), c.experiment) != experiment_names().end());
    }
}

TEST_CASE("round trip through JSON") {
    for (const char* name : {"example61.json", "example62.json", "example46.json"}) {
        const ExperimentConfig a = load_config(kConfigs / name);
        const ExperimentConfig b = parse_config(to_json(a));
        CHECK(a.model.alpha.mat() == b.model.alpha.mat());
        CHECK(a.model.beta == b.model.beta);
        CHECK(a.model.sigma == b.model.sigma);
        CHECK(a.model.sigma0.mat() == b.model.sigma0.mat());
        CHECK(a.model.delta == b.model.delta);
        CHECK(a.model.m0 == b.model.m0);
        CHECK(a.model.horizon == b.model.horizon);
        CHECK(a.schedule.build(a.model.horizon).dates() == b.schedule.build(b.model.horizon).dates());
        CHECK(a.grid_step == b.grid_step);
        CHECK(a.min_steps == b.min_steps);
        CHECK(a.seed == b.seed);
        CHECK(a.ns == b.ns);
        CHECK(a.tolerances.value == b.tolerances.value);
        CHECK(to_json(a) == to_json(b));
    }
    nlohmann::json j = base_json();
    j["model"]["r"] = {{"knots", {{0.0, 0.01}, {1.0, 0.03}}}};
    const ExperimentConfig c = parse_config(j);
    CHECK(c.model.rate(0.5) == doctest::Approx(0.02));
    CHECK(parse_config(to_json(c)).model.rate(0.25) == doctest::Approx(0.015));
}

TEST_CASE("configuration errors name the field") {
    nlohmann::json j = base_json();
    j["model"]["alpha"] = {{1, 0, 0}, {0, -1, 0}, {0, 0, 1}};
    CHECK(config_error(j).rfind("model.alpha", 0) == 0);

    j = base_json();
    j["model"].erase("sigma");
    CHECK(config_error(j) == "model.sigma: missing");

    j = base_json();
    j["model"]["sigma"] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 0}};
    CHECK(config_error(j).rfind("model.sigma", 0) == 0);

    j = base_json();
    j["schedule"]["Gamma"] = {{1, 0, 0}, {0, 1, 0}, {0, 0, -0.5}};
    CHECK(config_error(j).rfind("schedule", 0) == 0);

    j = base_json();
    j["model"]["alpha"] = {{1, 0.5}, {0.5, 1}};
    CHECK_FALSE(config_error(j).empty());

    j = base_json();
    j["grid_step"] = "fine";
    CHECK(config_error(j) == "grid_step: has the wrong type");

    j = base_json();
    j["regime"] = "Q";
    CHECK(config_error(j).rfind("regime", 0) == 0);

    try {
        parse_config_text("{\n  \"model\": {\n    \"alpha\": [[1,]]\n  }\n}\n");
        FAIL("expected a syntax error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("golden comparisons and number format") {
    const nlohmann::json result = {{"a", 1.0}, {"rows", {{{"v", 0.5}}, {{"v", 0.7}}}}, {"m", {{1.0, 2.0}}}};
    nlohmann::json expected = {{"checks", {{{"path", "/a"}, {"value", 1.0005}, {"tol", 1e-3}},
                                           {{"path", "/rows/1/v"}, {"value", 0.7}, {"tol", 1e-9}},
                                           {{"path", "/m"}, {"value", {{1.0, 2.0}}}, {"tol", 1e-12}}}}};
    CHECK(golden_mismatches(result, expected).empty());
    expected["checks"][0]["tol"] = 1e-4;
    CHECK(golden_mismatches(result, expected).size() == 1);
    expected["checks"][0]["path"] = "/missing";
    CHECK(golden_mismatches(result, expected).size() == 1);

    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.3333333333");
    CHECK(format_number(-2.5e-12) == "-2.5e-12");
}

TEST_CASE("are experiment: residual by direct substitution") {
    ScratchDir dir("are");
    std::ostringstream log;
    RunOptions opts;
    opts.out_dir = dir.path.string();
    const ExperimentConfig cfg = load_config(kConfigs / "example61.json");
    const RunResult r = run("are", cfg, opts, log);
    CHECK(r.code == ExitCode::Ok);
    const nlohmann::json j = nlohmann::json::parse(slurp(dir.path / "are.json"));
    Matrix g(3, 3);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) g(a, b) = j["gamma_inf"][a][b].get<double>();
    const Matrix p = (cfg.model.sigma * cfg.model.sigma.transpose()).inverse();
    const Matrix lhs = -cfg.model.alpha.mat() * g - g * cfg.model.alpha.mat() + cfg.model.beta * cfg.model.beta.transpose() - g * p * g;
    CHECK(lhs.norm() <= 1e-9);
}

TEST_CASE("simulate is deterministic for a fixed seed") {
    ScratchDir a("sim-a"), b("sim-b"), c("sim-c");
    ExperimentConfig cfg = load_config(kConfigs / "example61.json");
    cfg.grid_step = 0.01;
    std::ostringstream log;
    for (const auto* d : {&a, &b}) run("simulate", cfg, RunOptions{7, std::nullopt, d->path.string(), false}, log);
    run("simulate", cfg, RunOptions{8, std::nullopt, c.path.string(), false}, log);
    for (const char* f : {"simulate.csv", "experts.csv"}) {
        const std::string first = slurp(a.path / f);
        CHECK_FALSE(first.empty());
        CHECK(first.rfind("# driftfilter v1 simulate", 0) == 0);
        CHECK(first == slurp(b.path / f));
        CHECK(first != slurp(c.path / f));
    }
}

TEST_CASE("command line exit codes") {
    ScratchDir dir("cli");
    const std::string out = " --out " + dir.path.string();
    const std::string c61 = (kConfigs / "example61.json").string();
    CHECK(cli("are --config " + c61 + out) == 0);
    CHECK(fs::exists(dir.path / "are.json"));
    CHECK(cli("are --config /nonexistent.json" + out) == 2);
    CHECK(cli("bogus --config " + c61 + out) == 2);
    CHECK(cli("are" + out) == 2);

    const fs::path bad = dir.path / "bad.json";
    std::ofstream(bad) << "{ \"model\": ";
    CHECK(cli("are --config " + bad.string() + out) == 2);

    // an output directory that cannot be created
    const fs::path blocker = dir.path / "file";
    std::ofstream(blocker) << "x";
    CHECK(cli("are --config " + c61 + " --out " + (blocker / "sub").string()) == 1);

    // a counterexample whose construction precondition fails
    CHECK(cli("counterexample --config " + (kConfigs / "example46.json").string() + out) == 3);

    // golden mismatch
    nlohmann::json j = base_json();
    j["expected"] = {{"checks", {{{"path", "/residual_norm"}, {"value", 1.0}, {"tol", 1e-6}}}}};
    const fs::path wrong = dir.path / "wrong.json";
    std::ofstream(wrong) << j.dump();
    CHECK(cli("are --check --config " + wrong.string() + out) == 4);
    j["expected"] = {{"checks", {{{"path", "/residual_norm"}, {"value", 0.0}, {"tol", 1e-9}}}}};
    std::ofstream(wrong) << j.dump();
    CHECK(cli("are --check --config " + wrong.string() + out) == 0);
}

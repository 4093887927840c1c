#include "dwave/cli.hpp"
#include "dwave/io.hpp"
#include "dwave/theory.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using dwave::cli::RunConfig;

namespace {

struct Invocation {
    int code = 0;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "dwave");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = dwave::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

RunConfig parse(std::vector<std::string> args) {
    args.insert(args.begin(), "dwave");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return dwave::cli::parse_command_line(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t k = 0;
    for (std::string line; std::getline(in, line);) ++k;
    return k;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("dwave_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("predict text and json") {
    const Invocation text = invoke({"predict", "--n", "1", "--p", "2"});
    CHECK(text.code == 0);
    CHECK(text.out.find("kappa    = 0.5") != std::string::npos);
    CHECK(text.out.find("subcritical-power") != std::string::npos);
    CHECK(text.out.find("eps^(-1/kappa+delta)") != std::string::npos);

    const Invocation js = invoke({"predict", "--n", "2", "--p", "1.5", "--beta", "0.5", "--json"});
    CHECK(js.code == 0);
    const auto j = nlohmann::json::parse(js.out);
    CHECK(j["kappa"].get<double>() == doctest::Approx(1.5));
    CHECK(j["p_crit"].get<double>() == doctest::Approx(2.0));
    CHECK(j["regime"] == "subcritical-power");

    // beta = 0 column: three cases split at p_alpha and p_crit.
    const Invocation table = invoke({"predict", "--n", "2", "--alpha", "0.5", "--json"});
    CHECK(table.code == 0);
    const auto t = nlohmann::json::parse(table.out);
    CHECK(t["cases"].size() == 3);
    CHECK(t["p_alpha"].get<double>() == doctest::Approx(4.0 / 3.0));
    CHECK(t["p_crit"].get<double>() == doctest::Approx(1.0 + 2.0 / 1.5));
}

TEST_CASE("exploratory guard and argument errors") {
    CHECK(invoke({"predict", "--n", "1", "--p", "2", "--alpha", "0.3", "--beta", "0.3"}).code == 2);
    const Invocation ex = invoke({"predict", "--n", "1", "--p", "2", "--alpha", "0.3", "--beta", "0.3", "--exploratory"});
    CHECK(ex.code == 0);
    CHECK(ex.out.find("p_c") != std::string::npos);
    CHECK(invoke({"predict", "--n", "1", "--bogus", "2"}).code == 2);
    CHECK(invoke({"predict", "--n", "1", "--alpha", "1.5"}).code == 2);
    CHECK(invoke({}).code == 2);
    const Invocation help = invoke({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("simulate") != std::string::npos);
    CHECK(invoke({"--version"}).out.find(dwave::cli::kVersion) != std::string::npos);
}

TEST_CASE("config text parsing") {
    const auto kv = dwave::cli::parse_config_text("# comment\nn = 2\np=1.5  \n\neps_grid=1,0.5\n");
    CHECK(kv.at("n") == "2");
    CHECK(kv.at("p") == "1.5");
    CHECK(kv.at("eps_grid") == "1,0.5");
    CHECK(kv.size() == 3);

    const auto js = dwave::cli::parse_config_text(R"({"command": "simulate", "config": {"n": 3, "eps": 0.5, "equation": "heat"}})");
    CHECK(js.at("n") == "3");
    CHECK(js.at("eps") == "0.5");
    CHECK(js.at("equation") == "heat");

    RunConfig cfg;
    CHECK_THROWS_AS(dwave::cli::apply_setting(cfg, "nonsense", "1"), dwave::ParameterError);
    CHECK_THROWS_AS(dwave::cli::apply_setting(cfg, "p", "two"), dwave::ParameterError);
    CHECK_THROWS_AS(dwave::cli::apply_setting(cfg, "equation", "schrodinger"), dwave::ParameterError);
    dwave::cli::apply_setting(cfg, "data-width", "0.75");
    CHECK(cfg.problem.data.width == 0.75);
}

TEST_CASE("config precedence: file, then environment, then flags") {
    TempDir dir("precedence");
    const fs::path file = dir.path / "run.cfg";
    std::ofstream(file) << "p = 1.5\nn = 2\nworkers = 2\n";

    RunConfig a = parse({"simulate", "--config", file.string()});
    CHECK(a.problem.p == 1.5);
    CHECK(a.problem.n == 2);
    CHECK(a.workers == 2);

    ::setenv("DWAVE_WORKERS", "3", 1);
    RunConfig b = parse({"simulate", "--config", file.string(), "--p", "2"});
    CHECK(b.problem.p == 2.0);
    CHECK(b.workers == 3);
    RunConfig c = parse({"simulate", "--config", file.string(), "--workers", "4"});
    CHECK(c.workers == 4);
    ::unsetenv("DWAVE_WORKERS");

    // resolved() feeds back into the same settings.
    RunConfig d = parse({"simulate", "--n", "3", "--p", "1.4", "--eps", "0.3", "--dx", "0.01", "--no-source"});
    RunConfig e;
    for (const auto& [k, v] : d.resolved()) dwave::cli::apply_setting(e, k, v);
    CHECK(e.resolved() == d.resolved());
    CHECK_FALSE(e.problem.source);
}

TEST_CASE("simulate writes its artifacts and reproduces from the manifest") {
    TempDir dir("simulate");
    const fs::path a = dir.path / "a", b = dir.path / "b";
    const Invocation run = invoke({"simulate", "--n", "1", "--p", "2", "--eps", "1", "--dx", "0.04",
                                   "--tmax", "20", "--trace-stride", "0", "--out", a.string()});
    REQUIRE(run.code == 0);
    CHECK(fs::exists(a / "manifest.json"));
    CHECK(fs::exists(a / "norms.csv"));
    CHECK(fs::exists(a / "result.json"));
    CHECK_FALSE(fs::exists(a / "trace.csv"));
    const auto result = nlohmann::json::parse(slurp(a / "result.json"));
    CHECK(result["status"] == "blowup");
    CHECK(result["T_est"].get<double>() > 10.0);
    CHECK(result["T_est"].get<double>() < 16.0);

    const Invocation again = invoke({"simulate", "--config", (a / "manifest.json").string(), "--out", b.string()});
    REQUIRE(again.code == 0);
    for (const char* f : {"manifest.json", "norms.csv", "result.json"}) {
        CAPTURE(f);
        CHECK(slurp(a / f) == slurp(b / f));
    }
}

TEST_CASE("certify pipeline") {
    TempDir dir("certify");
    const fs::path sim = dir.path / "sim", cert = dir.path / "cert";
    REQUIRE(invoke({"simulate", "--eps", "1", "--dx", "0.04", "--tmax", "20", "--trace-stride", "2",
                    "--out", sim.string()})
                .code == 0);
    REQUIRE(fs::exists(sim / "trace.csv"));
    const Invocation c = invoke({"certify", "--trace", sim.string(), "--out", cert.string()});
    REQUIRE(c.code == 0);
    CHECK(count_lines(cert / "certificates.csv") == 4);
    std::ifstream in(cert / "certificates.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto cells = dwave::io::split_csv(line);
        REQUIRE(cells.size() == 10);
        CHECK(dwave::io::parse_double(cells[2]) >= 0.0);
        CHECK(dwave::io::parse_double(cells[7]) < 1e-3);
    }
    CHECK(invoke({"certify", "--trace", (dir.path / "missing").string(), "--out", (dir.path / "x").string()}).code != 0);
    CHECK_FALSE(fs::exists(dir.path / "x"));
}

TEST_CASE("sweep resume is idempotent") {
    TempDir dir("sweep");
    const fs::path out = dir.path / "sw";
    const std::vector<std::string> base{"sweep", "--n", "1", "--p", "2", "--dx", "0.04", "--tmax", "40",
                                        "--no-fit", "--out", out.string()};
    auto with = [&](std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        return invoke(args);
    };
    REQUIRE(with({"--eps-grid", "1,0.7"}).code == 0);
    const std::string first = slurp(out / "sweep.csv");
    CHECK(count_lines(out / "sweep.csv") == 3);

    REQUIRE(with({"--eps-grid", "1,0.7"}).code == 0);
    CHECK(slurp(out / "sweep.csv") == first);

    REQUIRE(with({"--eps-grid", "1,0.7,0.5"}).code == 0);
    const std::string extended = slurp(out / "sweep.csv");
    CHECK(count_lines(out / "sweep.csv") == 4);
    CHECK(extended.substr(0, first.size()) == first);

    // Changing a per-point setting invalidates the checkpoint.
    auto changed = base;
    changed[4] = "1.9";
    changed.insert(changed.end(), {"--eps-grid", "1"});
    CHECK(invoke(changed).code == 2);
    CHECK(slurp(out / "sweep.csv") == extended);
}

TEST_CASE("failed runs leave no partial outputs") {
    TempDir dir("failure");
    const fs::path out = dir.path / "few";
    // Two points cannot support the exponent fit.
    const Invocation r = invoke({"sweep", "--n", "1", "--p", "2", "--dx", "0.04", "--tmax", "20",
                                 "--eps-grid", "1,0.9", "--out", out.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("at least 4") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("executable exit codes") {
    const char* exe = std::getenv("DWAVE_CLI");
    if (!exe) return;
    const std::string quoted = std::string("\"") + exe + "\"";
    CHECK(std::system((quoted + " predict --n 1 --p 2 > /dev/null").c_str()) == 0);
    const int rc = std::system((quoted + " predict --n 1 --alpha 0.2 --beta 0.2 > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 2);
}

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "varpath/io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    json report;  // parsed stdout when it is JSON, otherwise null
};

std::string cli_path() {
    const char* p = std::getenv("VARPATH_CLI");
    REQUIRE(p != nullptr);
    return p;
}

std::string geometries_dir() {
    const char* p = std::getenv("VARPATH_GEOMETRIES");
    REQUIRE(p != nullptr);
    return p;
}

std::string geom(const std::string& name) { return geometries_dir() + "/" + name; }

RunResult run_cli(const std::string& args) {
    std::string cmd = "'" + cli_path() + "' " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    size_t n = 0;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (!r.out.empty() && (r.out[0] == '{' || r.out[0] == '[')) {
        r.report = json::parse(r.out, nullptr, false);
    }
    return r;
}

fs::path scratch_dir() {
    fs::path p = fs::temp_directory_path() / "varpath_cli_test";
    fs::create_directories(p);
    return p;
}

std::string write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
    return p.string();
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("inspect reports the geometry summary") {
    RunResult r = run_cli("inspect --geometry " + geom("flat.json"));
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.report.is_object());
    CHECK(r.report.contains("config"));
    CHECK(r.report.contains("results"));
    CHECK(r.report.at("pass").get<bool>());
    const json& res = r.report.at("results");
    CHECK(res.at("dim").get<int>() == 2);
    CHECK(res.at("coords") == json::array({"t", "x"}));
    CHECK_FALSE(res.at("weyl").get<bool>());
    CHECK(res.at("metric_at_base") == json::array({json::array({1.0, 0.0}), json::array({0.0, 1.0})}));
}

TEST_CASE("connection reports a compatible sphere connection") {
    RunResult r = run_cli("connection --geometry " + geom("sphere.json"));
    REQUIRE(r.exit_code == 0);
    const json& res = r.report.at("results");
    CHECK(res.at("compatibility_residual").get<double>() <= 1e-12);
    // equator of the unit sphere: Gamma^0_11 = -sin cos = 0, Gamma^1_01 = cot = 0
    CHECK(std::abs(res.at("christoffel")[0][1][1].get<double>()) < 1e-12);
    CHECK(r.report.at("pass").get<bool>());
}

TEST_CASE("solve-h recovers the closed-form effective metric") {
    RunResult r = run_cli("solve-h --geometry " + geom("curved.json") + " --x0 0.7,0.4");
    REQUIRE(r.exit_code == 0);
    const json& res = r.report.at("results");
    CHECK(std::abs(res.at("H")[0][0].get<double>() - 1.0) < 1e-9);
    CHECK(std::abs(res.at("H")[1][1].get<double>() - 1.49) < 1e-9);
    CHECK(std::abs(res.at("H")[0][1].get<double>()) < 1e-12);
    CHECK(res.at("christoffel_consistency").get<double>() <= 1e-10);
    CHECK_FALSE(res.at("degenerate").get<bool>());
    CHECK(r.report.at("pass").get<bool>());
}

TEST_CASE("verify-action passes on the closed-form autoparallel") {
    RunResult r = run_cli("verify-action --geometry " + geom("weyl.json") +
                          " --x0 0,0 --v0 1,0 --lambda-span 0,0.5");
    REQUIRE(r.exit_code == 0);
    const json& res = r.report.at("results");
    CHECK(res.at("el_residual_max").get<double>() <= 1e-6);
    CHECK(res.at("affine_defect").get<double>() <= 1e-8);
    CHECK(res.at("norm_drift").get<double>() <= 1e-8);
    CHECK(res.at("value").get<double>() > 0.0);
    CHECK(r.report.at("pass").get<bool>());
}

TEST_CASE("integrate writes equal csv trajectories when Q vanishes") {
    fs::path dir = scratch_dir();
    fs::path geo_csv = dir / "geodesic.csv";
    fs::path auto_csv = dir / "autoparallel.csv";
    std::string common = " --geometry " + geom("sphere.json") +
                         " --x0 1.5707963267948966,0 --v0 0,1 --lambda-span 0,2 --steps 100 --format csv";
    RunResult rg = run_cli("integrate" + common + " --kind geodesic --output " + geo_csv.string());
    RunResult ra = run_cli("integrate" + common + " --kind autoparallel --output " + auto_csv.string());
    REQUIRE(rg.exit_code == 0);
    REQUIRE(ra.exit_code == 0);
    CHECK(read_text(geo_csv) == read_text(auto_csv));

    varpath::Trajectory traj = varpath::read_trajectory_csv(geo_csv.string());
    REQUIRE(traj.lambdas.size() == 101);
    const varpath::Vec& xe = traj.xs.back();
    CHECK(std::abs(xe[0] - 1.5707963267948966) < 1e-9);
    CHECK(std::abs(xe[1] - 2.0) < 1e-9);
}

TEST_CASE("integrate csv round trips through the reader") {
    fs::path out = scratch_dir() / "roundtrip.csv";
    RunResult r = run_cli("integrate --geometry " + geom("weyl.json") +
                          " --x0 0,0 --v0 1,0 --lambda-span 0,0.5 --steps 32 --format csv --output " +
                          out.string());
    REQUIRE(r.exit_code == 0);
    varpath::Trajectory traj = varpath::read_trajectory_csv(out.string());
    REQUIRE(traj.samples() == 33);
    // rewriting must reproduce the file byte for byte (%.17g is lossless)
    fs::path again = scratch_dir() / "roundtrip2.csv";
    varpath::write_trajectory_csv(again.string(), traj);
    CHECK(read_text(out) == read_text(again));
    CHECK(std::abs(traj.xs.back()[0] + std::log(0.5)) < 1e-7);
}

TEST_CASE("integrate adaptive method reports step accounting") {
    RunResult r = run_cli("integrate --geometry " + geom("weyl.json") +
                          " --x0 0,0 --v0 1,0 --lambda-span 0,0.5 --method rkf45");
    REQUIRE(r.exit_code == 0);
    const json& res = r.report.at("results");
    CHECK(res.at("trajectory").at("method").get<std::string>() == "rkf45");
    CHECK(res.at("samples").get<int>() > 5);
    CHECK(res.at("steps_accepted").get<int>() + 1 == res.at("samples").get<int>());
    CHECK(res.at("norm_drift").get<double>() <= 1e-7);
}

TEST_CASE("holonomy converges at fourth order on an integrable geometry") {
    RunResult r = run_cli("holonomy --geometry " + geom("curved.json") +
                          " --x0 0.3,0.2 --side 0.9 --steps 10");
    REQUIRE(r.exit_code == 0);
    const json& res = r.report.at("results");
    REQUIRE(res.at("orders").size() == 3);
    for (const json& o : res.at("orders")) {
        REQUIRE_FALSE(o.is_null());
        CHECK(o.get<double>() > 3.5);
        CHECK(o.get<double>() < 4.5);
    }
    CHECK(r.report.at("pass").get<bool>());
}

TEST_CASE("holonomy flags the non-integrable obstruction") {
    RunResult r = run_cli("holonomy --geometry " + geom("nonweyl.json") + " --x0 0,0 --side 0.1");
    CHECK(r.exit_code == 1);
    const json& res = r.report.at("results");
    // the defect plateaus at |exp(-0.003) - 1| instead of converging to zero
    for (const json& d : res.at("defects")) {
        CHECK(std::abs(d.get<double>() - 2.9955044966269995e-3) < 1e-6);
    }
    CHECK_FALSE(r.report.at("pass").get<bool>());
}

TEST_CASE("check-helmholtz accepts the integrable geometry and rejects the obstruction") {
    RunResult ok = run_cli("check-helmholtz --geometry " + geom("curved.json") +
                           " --samples 40 --seed 11");
    REQUIRE(ok.exit_code == 0);
    const json& res = ok.report.at("results");
    CHECK(res.at("max").at("h3_generic").get<double>() <= 1e-7);
    CHECK(res.at("max").at("h2_generic").get<double>() <= 1e-7);
    CHECK(ok.report.at("pass").get<bool>());

    RunResult bad = run_cli("check-helmholtz --geometry " + geom("nonweyl.json") +
                            " --samples 40 --seed 11");
    CHECK(bad.exit_code == 1);
    CHECK(bad.report.at("results").at("max").at("h3_generic").get<double>() > 0.01);
    CHECK_FALSE(bad.report.at("pass").get<bool>());
}

TEST_CASE("check-helmholtz reports are deterministic") {
    std::string args = "check-helmholtz --geometry " + geom("curved.json") + " --samples 20 --seed 5";
    RunResult a = run_cli(args);
    RunResult b = run_cli(args);
    REQUIRE(a.exit_code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("reports can be written to a file") {
    fs::path out = scratch_dir() / "report.json";
    RunResult r = run_cli("inspect --geometry " + geom("weyl.json") + " --output " + out.string());
    REQUIRE(r.exit_code == 0);
    json from_file = json::parse(read_text(out));
    CHECK(from_file == r.report);
    CHECK(from_file.at("results").at("weyl").get<bool>());
}

TEST_CASE("malformed geometry files produce a structured error") {
    fs::path bad = scratch_dir() / "bad_metric.json";
    write_text(bad, R"json({
        "dim": 2, "coords": ["a", "b"],
        "metric": {"0,0": "1", "0,5": "1"},
        "base_point": [0.0, 0.0]
    })json");
    RunResult r = run_cli("inspect --geometry " + bad.string());
    CHECK(r.exit_code == 1);
    REQUIRE(r.report.is_object());
    CHECK(r.report.at("error").at("type").get<std::string>() == "geometry");
    CHECK(r.report.at("error").at("message").get<std::string>().find("\"0,5\"") != std::string::npos);
    CHECK_FALSE(r.report.at("pass").get<bool>());
}

TEST_CASE("missing geometry file produces a structured error") {
    RunResult r = run_cli("inspect --geometry /nonexistent/nowhere.json");
    CHECK(r.exit_code == 1);
    CHECK(r.report.at("error").at("type").get<std::string>() == "geometry");
    CHECK(r.report.at("error").at("message").get<std::string>().find("cannot open") != std::string::npos);
}

TEST_CASE("invalid options are rejected with nonzero exit") {
    std::string flat = geom("flat.json");

    RunResult kind = run_cli("integrate --geometry " + flat + " --x0 0,0 --v0 1,0 --kind wiggly");
    CHECK(kind.exit_code == 1);
    CHECK(kind.report.at("error").at("type").get<std::string>() == "numerics");

    RunResult method = run_cli("integrate --geometry " + flat + " --x0 0,0 --v0 1,0 --method euler");
    CHECK(method.exit_code == 1);
    CHECK(method.report.at("error").at("message").get<std::string>().find("euler") != std::string::npos);

    RunResult mult = run_cli("check-helmholtz --geometry " + flat + " --multiplier magic --samples 2");
    CHECK(mult.exit_code == 1);

    RunResult csv = run_cli("integrate --geometry " + flat + " --x0 0,0 --v0 1,0 --format csv");
    CHECK(csv.exit_code == 1);
    CHECK(csv.report.at("error").at("message").get<std::string>().find("--output") != std::string::npos);

    RunResult span = run_cli("integrate --geometry " + flat + " --x0 0,0 --v0 1,0 --lambda-span 1");
    CHECK(span.exit_code == 1);

    RunResult missing = run_cli("integrate --geometry " + flat + " --v0 1,0");
    CHECK(missing.exit_code != 0);
}

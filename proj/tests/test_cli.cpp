/*
   Copyright 2026 The pies authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#include <catch_amalgamated.hpp>

#include "pies/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace pies;
using io::json;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

std::string cli_path() {
    const char* p = std::getenv("PIES_CLI");
    return p ? p : "";
}

Run run(const std::string& args) {
    Run r;
    const std::string cmd = cli_path() + " " + args + " 2>&1";
    FILE* f = popen(cmd.c_str(), "r");
    REQUIRE(f != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) r.output.append(buf.data(), n);
    const int st = pclose(f);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("pies_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string source_dir() { return PIES_SOURCE_DIR; }

struct CsvRows {
    std::vector<std::vector<double>> rows;
};

CsvRows read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    CsvRows c;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        c.rows.push_back(std::move(row));
    }
    return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// serialization, in process

TEST_CASE("PDE files round trip", "[io]") {
    for (auto& m : {models::fisher(), models::heat(), models::burgers_reaction()}) {
        auto j = io::to_json(m);
        PdeModel back = io::pde_of(j);
        CHECK(io::to_json(back) == j);
        CHECK(io::model_equal(compile(back), compile(m)));
    }
}

TEST_CASE("PIE files round trip to an identical model", "[io]") {
    PieModel p = compile(models::burgers_reaction());
    auto j = io::to_json(p);
    PieModel back = io::pie_of(json::parse(j.dump()));
    CHECK(io::model_equal(back, p));
    CHECK(io::to_json(back).dump() == j.dump());
}

TEST_CASE("DistPoly files round trip", "[io]") {
    PieModel p = compile(models::fisher());
    DistPoly g = build_g_r(p, Rational(7, 3));
    DistPoly back = io::distpoly_of(json::parse(io::to_json(g).dump()));
    CHECK(back == g);
}

TEST_CASE("certificates round trip", "[io]") {
    StabilityCertificate c;
    c.mode = "full";
    c.degrees.dbar = 3;
    c.r = 1.5;
    c.lambda = 0.25;
    c.eps = 0.01;
    c.C = 2.0 / 3.0;
    c.M = c.C / c.eps;
    c.status = FeasStatus::Infeasible;
    c.residual = 1e-3;
    c.min_eig = -2e-9;
    c.residual_tol = 1e-7;
    c.eig_tol = -1e-8;
    c.rows = 17;
    c.iterations = 9;
    c.hash = "0123456789abcdef";
    c.gram["QV"] = Eigen::MatrixXd::Identity(2, 2) / 3.0;
    auto j = io::to_json(c, true);
    StabilityCertificate back = io::certificate_of(json::parse(j.dump()));
    CHECK(io::to_json(back, true) == j);
    CHECK(back.gram.at("QV")(1, 1) == c.gram.at("QV")(1, 1));
    CHECK_FALSE(j.contains("timings"));
}

TEST_CASE("malformed documents are rejected", "[io]") {
    CHECK_THROWS_AS(io::pde_of(json::parse(R"({"order":2})")), io::FormatError);
    CHECK_THROWS_AS(io::pie_of(json::parse(R"({"format":"pies.pde/1"})")), io::FormatError);
    auto j = io::to_json(models::heat());
    j["terms"][0]["exponents"] = {0, 1};
    CHECK_THROWS_AS(io::pde_of(j), std::invalid_argument);
    j = io::to_json(models::heat());
    j["terms"][0]["coef"] = "s +* 2";
    CHECK_THROWS(io::pde_of(j));
}

// ---------------------------------------------------------------------------
// command line

TEST_CASE("convert writes the Fisher PIE with the golden T kernel", "[cli]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto dir = scratch("convert_fisher");
    auto r = run("convert " + source_dir() + "/models/fisher.json --out " + dir.string());
    REQUIRE(r.code == 0);
    CHECK(r.output.find("T.R1 = ") != std::string::npos);
    CHECK(r.output.find("C2 term: coef -1 : T⊗T") != std::string::npos);
    PieModel pie = io::pie_of(io::read_json((dir / "pie.json").string()));
    CHECK(pie.T.R1(0, 0) == parse_poly("(s - 1)*theta_1"));
    CHECK(pie.T.R2(0, 0) == parse_poly("s*(theta_1 - 1)"));
    CHECK(io::model_equal(pie, compile(models::fisher())));
    // byte-identical output from an identical model read back from the builtin
    auto dir2 = scratch("convert_fisher_builtin");
    REQUIRE(run("convert builtin:fisher --out " + dir2.string()).code == 0);
    CHECK(slurp(dir / "pie.json") == slurp(dir2 / "pie.json"));
}

TEST_CASE("convert on the heat equation gives one C operator", "[cli]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto dir = scratch("convert_heat");
    auto r = run("convert " + source_dir() + "/models/heat.json --out " + dir.string());
    REQUIRE(r.code == 0);
    CHECK(r.output.find("C: 1 operator(s)") != std::string::npos);
    PieModel pie = io::pie_of(io::read_json((dir / "pie.json").string()));
    CHECK(pie.C.size() == 1);
}

TEST_CASE("convert tags the Burgers advection term", "[cli]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto dir = scratch("convert_burgers");
    auto r = run("convert " + source_dir() + "/models/burgers.json --out " + dir.string());
    REQUIRE(r.code == 0);
    CHECK(r.output.find("C2 term: coef -1 : T⊗R1") != std::string::npos);
    CHECK(r.output.find("C1 term: coef 1 : R2") != std::string::npos);
}

TEST_CASE("convert reports input errors with exit code 1", "[cli]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto dir = scratch("convert_errors");
    std::ofstream(dir / "bad.json") << "{bad";
    auto r = run("convert " + (dir / "bad.json").string() + " --out " + dir.string());
    CHECK(r.code == 1);
    CHECK(r.output.find("parse error") != std::string::npos);
    std::ofstream(dir / "neumann.json")
        << R"({"format":"pies.pde/1","domain":["0","1"],"order":2,"terms":[{"coef":"1","exponents":[0,0,1]}],)"
        << R"("B":[["0","1","0","0"],["0","0","0","1"]]})";
    r = run("convert " + (dir / "neumann.json").string() + " --out " + dir.string());
    CHECK(r.code == 1);
    CHECK(r.output.find("singular: [0 1; 0 1]") != std::string::npos);
    CHECK(run("convert " + (dir / "missing.json").string()).code == 1);
}

TEST_CASE("stability flag validation", "[cli]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto r = run("stability builtin:fisher --r 0.0");
    CHECK(r.code == 1);
    CHECK(r.output.find("ball radius must be positive") != std::string::npos);
    CHECK(run("stability builtin:fisher --r -1").code == 1);
    CHECK(run("stability builtin:fisher --r 1 --bisect rate --lambda 2").code == 1);
    CHECK(run("stability builtin:fisher --bisect radius --r 2").code == 1);
    CHECK(run("stability builtin:fisher --r 1 --bisect sideways").code == 1);
    CHECK(run("stability builtin:fisher --r 1 --solver magic").code == 1);
    CHECK(run("stability builtin:fisher").code == 1);
    CHECK(run("stability builtin:fisher --r 1 --degree-d 3").code == 1);
    CHECK(run("stability builtin:fisher --r 1 --eps2 0").code == 1);
}

TEST_CASE("stability exit codes and byte-identical reports", "[cli][solve]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto d1 = scratch("stab1"), d2 = scratch("stab2"), d3 = scratch("stab3");
    const std::string base = "stability builtin:heat --energy --r 1 --seed 11 ";
    auto r1 = run(base + "--out " + d1.string());
    CHECK(r1.code == 0);
    auto r2 = run(base + "--out " + d2.string());
    CHECK(r2.code == 0);
    CHECK(slurp(d1 / "certificate.json") == slurp(d2 / "certificate.json"));
    auto cert = io::read_json((d1 / "certificate.json").string());
    CHECK(cert["status"] == "feasible");
    CHECK(cert["spot_check"]["seed"] == 11);
    CHECK(cert["spot_check"]["samples"] == 100);
    CHECK(cert["spot_check"]["max_violation"].get<double>() <= 1e-6);
    CHECK(cert["residuals"]["primal"].get<double>() <= 1e-7);
    CHECK(cert["residuals"]["min_eig"].get<double>() >= -1e-8);
    auto timings = io::read_json((d1 / "timings.json").string());
    CHECK(timings["solve_seconds"].get<double>() > 0);
    // the heat equation cannot decay faster than pi^2 in energy
    auto r3 = run("stability builtin:heat --energy --r 1 --lambda 20 --out " + d3.string());
    CHECK(r3.code == 2);
    CHECK(io::read_json((d3 / "certificate.json").string())["status"] == "infeasible");
}

TEST_CASE("stability writes an SDPA file on request", "[cli][solve]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto d = scratch("sdpa");
    auto r = run("stability builtin:heat --energy --r 1 --spot-samples 0 --export-sdpa " + (d / "heat.dat-s").string() +
                 " --out " + d.string());
    CHECK(r.code == 0);
    SdpProblem p = import_sdpa(d / "heat.dat-s");
    auto cert = io::read_json((d / "certificate.json").string());
    CHECK(p.rows() == cert["rows"].get<int>());
    CHECK(problem_hash(p) == cert["hash"].get<std::string>());
}

TEST_CASE("simulate overlays the closed-form heat decay", "[cli]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto d = scratch("sim_heat");
    const double pi2 = M_PI * M_PI;
    auto r = run("simulate " + source_dir() + "/models/heat.json --r 1 --bound-lambda " + std::to_string(pi2) +
                 " --out " + d.string());
    REQUIRE(r.code == 0);
    auto csv = read_csv(d / "plotdata.csv");
    REQUIRE(csv.rows.size() == 201);
    for (auto& row : csv.rows) {
        const double exact = std::exp(-pi2 * row[1]);
        CHECK(std::abs(row[2] - exact) <= 1e-2 * exact);
        CHECK(std::abs(row[3] - exact) <= 1e-2 * exact);
    }
    CHECK(fs::exists(d / "traj_r1.csv"));
}

TEST_CASE("simulate Fisher at the default radii", "[cli]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto d = scratch("sim_fisher");
    auto r = run("simulate " + source_dir() + "/models/fisher.json --out " + d.string());
    REQUIRE(r.code == 0);
    auto summary = io::read_json((d / "simulation.json").string());
    REQUIRE(summary["series"].size() == 3);
    std::vector<double> rates;
    for (auto& s : summary["series"]) {
        CHECK_FALSE(s["blew_up"].get<bool>());
        CHECK(fs::exists(d / s["file"].get<std::string>()));
        rates.push_back(s["bound_lambda"].get<double>());
    }
    CHECK(summary["series"][0]["r"] == 0.8);
    CHECK(summary["series"][2]["r"] == 4.0);
    // r = 0.8 decays, and the bound rate falls with the radius
    auto traj = read_csv(d / "traj_r0.8.csv");
    for (std::size_t k = 1; k < traj.rows.size(); ++k) CHECK(traj.rows[k][1] < traj.rows[k - 1][1]);
    CHECK(traj.rows.back()[1] < 0.05 * 0.8);
    CHECK(rates[0] > rates[1]);
    CHECK(rates[1] > rates[2]);
    CHECK(rates[2] > 0);
    // the bound never sits below the data
    for (auto& row : read_csv(d / "plotdata.csv").rows) CHECK(row[2] <= row[3] * (1 + 1e-9));
}

TEST_CASE("simulate flags blow-up without failing", "[cli]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto d = scratch("sim_blowup");
    auto r = run("simulate builtin:fisher --r 8 --T 2 --out " + d.string());
    CHECK(r.code == 0);
    auto summary = io::read_json((d / "simulation.json").string());
    CHECK(summary["series"][0]["blew_up"].get<bool>());
    CHECK(r.output.find("blew up") != std::string::npos);
}

TEST_CASE("simulate through the PIE matches the PDE", "[cli]") {
    if (cli_path().empty()) SKIP("PIES_CLI not set");
    auto a = scratch("sim_pde"), b = scratch("sim_pie");
    REQUIRE(run("simulate builtin:burgers --r 1 --N 128 --out " + a.string()).code == 0);
    REQUIRE(run("simulate builtin:burgers --r 1 --N 128 --pie --out " + b.string()).code == 0);
    auto x = read_csv(a / "traj_r1.csv"), y = read_csv(b / "traj_r1.csv");
    REQUIRE(x.rows.size() == y.rows.size());
    for (std::size_t k = 0; k < x.rows.size(); ++k) CHECK(std::abs(x.rows[k][1] - y.rows[k][1]) <= 1e-3);
}

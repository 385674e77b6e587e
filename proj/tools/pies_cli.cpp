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


// pies: compile PDEs to PIEs, certify stability, simulate.
//
// Exit codes: 0 success or feasible, 1 invalid input or usage, 2 infeasible,
// 3 numerical failure of the solver.

#include "pies/io.hpp"
#include "pies/simulate.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace pies;
using io::json;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kInfeasible = 2, kNumerical = 3 };

int exit_for(FeasStatus s) {
    switch (s) {
        case FeasStatus::Feasible: return kOk;
        case FeasStatus::Infeasible: return kInfeasible;
        default: return kNumerical;
    }
}

// "builtin:fisher", "builtin:heat", "builtin:burgers" or a JSON path
json load_input(const std::string& src) {
    const std::string prefix = "builtin:";
    if (src.rfind(prefix, 0) == 0) {
        const std::string name = src.substr(prefix.size());
        if (name == "fisher") return io::to_json(models::fisher());
        if (name == "heat") return io::to_json(models::heat());
        if (name == "burgers") return io::to_json(models::burgers_reaction());
        throw std::invalid_argument("unknown builtin model " + name);
    }
    return io::read_json(src);
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

// ---------------------------------------------------------------------------

struct ConvertArgs {
    std::string input, out = ".";
};

int run_convert(const ConvertArgs& a) {
    json j = load_input(a.input);
    PdeModel pde = io::pde_of(j);
    PieModel pie = compile(pde);
    fs::path out = prepare_out(a.out) / "pie.json";
    io::write_json(out.string(), io::to_json(pie));
    std::cout << "T.R0 = " << pie.T.R0(0, 0) << "\n";
    std::cout << "T.R1 = " << pie.T.R1(0, 0) << "\n";
    std::cout << "T.R2 = " << pie.T.R2(0, 0) << "\n";
    std::cout << "C: " << pie.C.size() << " operator(s)\n";
    for (int k = 1; k <= pie.degree(); ++k) std::cout << "  C" << k << ": " << pie.Ck(k).terms.size() << " term(s)\n";
    for (auto& t : summarize(pde, pie)) {
        std::cout << "  C" << t.degree << " term: coef " << t.coef << " : ";
        for (std::size_t f = 0; f < t.tags.size(); ++f) std::cout << (f ? "⊗" : "") << t.tags[f];
        std::cout << "\n";
    }
    std::cout << "wrote " << out.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct StabilityArgs {
    std::string input, out = ".";
    std::optional<double> r, lambda;
    double eps2 = 1e-4;
    SosDegrees deg;
    bool energy = false, gram = false;
    std::string bisect, solver = "internal", export_sdpa;
    std::optional<double> lo, hi;
    double tol = 1e-2;
    int budget = 30, spot_samples = 100;
    std::uint64_t seed = 0;
};

json trace_json(const BisectResult& b, BisectMode mode) {
    json t = json::array();
    for (auto& [v, c] : b.trace)
        t.push_back({{mode == BisectMode::Rate ? "lambda" : "r", v},
                     {"status", to_string(c.status)},
                     {"residual", c.residual},
                     {"min_eig", c.min_eig}});
    return t;
}

int run_stability(const StabilityArgs& a) {
    PieModel pie = io::load_model(load_input(a.input));
    Theorem1Options opt{a.eps2, a.deg, a.energy};
    Theorem1Program prog(pie, opt);
    const Backend backend = a.solver == "sdpa-file" ? Backend::SdpaFile : Backend::Internal;
    fs::path out = prepare_out(a.out);

    StabilityCertificate cert;
    int code = kOk;
    json bis;
    if (a.bisect.empty()) {
        if (!a.r) throw std::invalid_argument("--r is required without --bisect");
        const double lambda = a.lambda.value_or(0.0);
        if (!a.export_sdpa.empty()) export_sdpa(prog.instance(*a.r, lambda), a.export_sdpa);
        cert = prog.solve(*a.r, lambda, backend);
        code = exit_for(cert.status);
    } else {
        const BisectMode mode = a.bisect == "rate" ? BisectMode::Rate : BisectMode::Radius;
        BisectOptions bo;
        bo.backend = backend;
        bo.tol = a.tol;
        bo.budget = a.budget;
        bo.lo = a.lo.value_or(mode == BisectMode::Rate ? 0.0 : 0.01);
        bo.hi = a.hi.value_or(10.0);
        const double fixed = mode == BisectMode::Rate ? *a.r : a.lambda.value_or(0.0);
        BisectResult b = bisect(prog, mode, fixed, bo);
        cert = b.cert;
        code = b.found ? kOk : exit_for(cert.status);
        bis = {{"format", "pies.bisection/1"},
               {"mode", a.bisect},
               {"fixed", fixed},
               {"bracket", {bo.lo, bo.hi}},
               {"tol", bo.tol},
               {"found", b.found},
               {"value", b.found ? json(b.value) : json(nullptr)},
               {"trace", trace_json(b, mode)}};
    }

    json report = io::to_json(cert, a.gram);
    SpotCheck sc = spot_check(prog, pie, cert, a.seed, a.spot_samples);
    report["spot_check"] = {{"seed", sc.seed}, {"samples", sc.samples}, {"max_violation", sc.max_violation}};
    io::write_json((out / "certificate.json").string(), report);
    io::write_json((out / "timings.json").string(), io::timings_json(cert));
    if (!bis.is_null()) io::write_json((out / "bisection.json").string(), bis);

    std::cout << "mode " << cert.mode << " r " << cert.r << " lambda " << cert.lambda << " status "
              << to_string(cert.status) << " residual " << cert.residual << " min_eig " << cert.min_eig << " M "
              << cert.M << " rows " << cert.rows << " hash " << cert.hash << "\n";
    if (!bis.is_null())
        std::cout << "bisect " << a.bisect << (bis["found"].get<bool>() ? " value " + bis["value"].dump() : " no feasible point")
                  << "\n";
    std::cerr << "assemble " << cert.assemble_seconds << " s, solve " << cert.solve_seconds << " s\n";
    return code;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string input, out = ".";
    std::vector<double> radii{0.8, 2.4, 4.0};
    std::vector<double> bound_lambda;
    double bound_M = 1.0, T = 1.0, sign = -1.0;
    int N = 256, samples = 201;
    bool pie = false, states = false;
};

// Largest lambda with norm(t) <= norm(0) e^{-lambda t} at every sample.
double fitted_rate(const Trajectory& tr) {
    double lam = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < tr.norms.size(); ++k)
        if (tr.norms[k] > 0) lam = std::min(lam, -std::log(tr.norms[k] / tr.norms[0]) / tr.times[k]);
    return std::isfinite(lam) ? lam : 0.0;
}

int run_simulate(const SimulateArgs& a) {
    json j = load_input(a.input);
    PdeModel pde = io::pde_of(j);
    if (!a.bound_lambda.empty() && a.bound_lambda.size() != a.radii.size())
        throw std::invalid_argument("--bound-lambda needs one value per radius");
    fs::path out = prepare_out(a.out);
    const double lo = pde.domain.lo(), L = pde.domain.hi() - lo;
    PieModel pie;
    if (a.pie) pie = compile(pde);

    std::vector<BoundSeries> series;
    json summary = json::array();
    for (std::size_t i = 0; i < a.radii.size(); ++i) {
        const double r = a.radii[i];
        // u0 = sign r sqrt(2/L) sin(pi (s - a) / L), so ||u0|| = r
        const double amp = a.sign * r * std::sqrt(2.0 / L), w = M_PI / L;
        SimConfig cfg;
        cfg.N = a.N;
        cfg.T = a.T;
        cfg.samples = a.samples;
        cfg.store_states = a.states;
        Trajectory tr;
        if (a.pie) {
            cfg.initial = [=](double s) { return -amp * w * w * std::sin(w * (s - lo)); };
            tr = simulate_pie(pie, cfg);
        } else {
            cfg.initial = [=](double s) { return amp * std::sin(w * (s - lo)); };
            tr = simulate_pde(pde, cfg);
        }
        const double lam = a.bound_lambda.empty() ? fitted_rate(tr) : a.bound_lambda[i];
        std::ostringstream name;
        name << "traj_r" << r << ".csv";
        std::ofstream f(out / name.str());
        write_trajectory_csv(f, tr);
        summary.push_back({{"r", r},
                           {"file", name.str()},
                           {"blew_up", tr.blew_up},
                           {"note", tr.note},
                           {"initial_rate", tr.blew_up ? json(nullptr) : json(initial_decay_rate(tr))},
                           {"bound_lambda", lam},
                           {"bound_M", a.bound_M},
                           {"final_norm", tr.norms.back()}});
        std::cout << "r " << r << (tr.blew_up ? " blew up: " + tr.note : "") << " final norm " << tr.norms.back()
                  << " bound rate " << lam << "\n";
        series.push_back({r, a.bound_M, lam, std::move(tr)});
    }
    std::ofstream plot(out / "plotdata.csv");
    write_plot_data(plot, series);
    io::write_json((out / "simulation.json").string(),
                   {{"format", "pies.simulation/1"}, {"via", a.pie ? "pie" : "pde"}, {"series", summary}});
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pies: PIE-based stability analysis of nonlinear PDEs"};
    app.require_subcommand(1);

    ConvertArgs ca;
    auto* conv = app.add_subcommand("convert", "compile a PDE file to a PIE file");
    conv->add_option("input", ca.input, "PDE JSON file or builtin:NAME")->required();
    conv->add_option("--out", ca.out, "output directory");

    StabilityArgs sa;
    auto* stab = app.add_subcommand("stability", "certify exponential stability on an L2 ball");
    stab->add_option("input", sa.input, "PDE or PIE JSON file or builtin:NAME")->required();
    const CLI::Validator radius(
        [](std::string& v) {
            double x = 0;
            return CLI::detail::lexical_cast(v, x) && x > 0 ? std::string() : "ball radius must be positive, got " + v;
        },
        "POSITIVE");
    auto* o_r = stab->add_option("--r", sa.r, "ball radius")->check(radius);
    auto* o_l = stab->add_option("--lambda", sa.lambda, "decay rate")->check(CLI::NonNegativeNumber);
    stab->add_option("--eps2", sa.eps2, "lower bound weight on V")->check(CLI::PositiveNumber);
    stab->add_option("--degree-d", sa.deg.d, "slack SOS degree");
    stab->add_option("--degree-dp", sa.deg.dp, "multiplier degree");
    stab->add_option("--degree-dbar", sa.deg.dbar, "monomial degree of V and single-factor slack bases");
    stab->add_option("--degree-dbar-quad", sa.deg.dbar_quad, "monomial degree of product slack factors");
    stab->add_option("--degree-dbar-mult", sa.deg.dbar_mult, "monomial degree of multipliers");
    stab->add_flag("--energy", sa.energy, "fix V to the energy functional");
    auto* o_b = stab->add_option("--bisect", sa.bisect, "bisect over rate or radius")
                    ->check(CLI::IsMember({"rate", "radius"}));
    stab->add_option("--lo", sa.lo, "lower end of the bisection bracket");
    stab->add_option("--hi", sa.hi, "upper end of the bisection bracket");
    stab->add_option("--tol", sa.tol, "bisection tolerance")->check(CLI::PositiveNumber);
    stab->add_option("--budget", sa.budget, "maximum number of bisection solves")->check(CLI::PositiveNumber);
    stab->add_option("--solver", sa.solver, "solver backend")->check(CLI::IsMember({"internal", "sdpa-file"}));
    stab->add_option("--out", sa.out, "output directory");
    stab->add_option("--seed", sa.seed, "seed of the randomized certificate spot check");
    stab->add_option("--spot-samples", sa.spot_samples, "number of spot-check samples")->check(CLI::NonNegativeNumber);
    stab->add_flag("--gram", sa.gram, "include the Gram matrices in the report");
    stab->add_option("--export-sdpa", sa.export_sdpa, "also write the SDP in SDPA sparse format")->excludes(o_b);

    SimulateArgs ma;
    auto* sim = app.add_subcommand("simulate", "simulate from u0 = r sqrt(2) sin(pi s) for several radii");
    sim->add_option("input", ma.input, "PDE JSON file or builtin:NAME")->required();
    sim->add_option("--r", ma.radii, "radii")->check(CLI::PositiveNumber)->delimiter(',');
    sim->add_option("--bound-lambda", ma.bound_lambda, "decay rate of the overlay bound, one per radius")->delimiter(',');
    sim->add_option("--bound-M", ma.bound_M, "gain of the overlay bound")->check(CLI::PositiveNumber);
    sim->add_option("--T", ma.T, "horizon")->check(CLI::PositiveNumber);
    sim->add_option("--N", ma.N, "grid intervals")->check(CLI::Range(32, 1 << 16));
    sim->add_option("--samples", ma.samples, "output times")->check(CLI::Range(2, 1 << 20));
    sim->add_option("--sign", ma.sign, "sign of the initial condition")->check(CLI::IsMember({-1.0, 1.0}));
    sim->add_flag("--pie", ma.pie, "integrate the PIE instead of the PDE");
    sim->add_flag("--states", ma.states, "write the state on the grid");
    sim->add_option("--out", ma.out, "output directory");

    try {
        app.parse(argc, argv);
        if (stab->parsed()) {
            if (sa.bisect == "rate" && o_l->count()) throw CLI::ExcludesError("--bisect rate", "--lambda");
            if (sa.bisect == "rate" && !o_r->count()) throw CLI::RequiredError("--r (with --bisect rate)");
            if (sa.bisect == "radius" && o_r->count()) throw CLI::ExcludesError("--bisect radius", "--r");
            if (sa.bisect.empty() && !o_r->count()) throw CLI::RequiredError("--r");
        }
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    try {
        if (conv->parsed()) return run_convert(ca);
        if (stab->parsed()) return run_stability(sa);
        return run_simulate(ma);
    } catch (const FullRankViolation& e) {
        std::cerr << "error: boundary conditions fail the rank condition: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return kInvalid;
}

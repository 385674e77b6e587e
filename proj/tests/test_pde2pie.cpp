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

#include "pies/fpi.hpp"
#include "pies/pde2pie.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace pies;
using Catch::Approx;

namespace {

// right-hand side of the PDE evaluated on u = T v using the operators R_j
std::vector<double> pde_rhs(const PdeModel& m, const Func& v, const std::vector<double>& grid) {
    std::vector<std::vector<double>> d;
    for (int j = 0; j <= m.n; ++j) d.push_back(apply_scalar(build_Rj(m.bc, j, m.domain), v, grid));
    std::vector<double> out(grid.size(), 0.0);
    for (auto& t : m.terms)
        for (std::size_t k = 0; k < grid.size(); ++k) {
            double prod = t.coef.eval({{var::s, grid[k]}});
            for (int j = 0; j <= m.n; ++j) prod *= std::pow(d[j][k], t.exponents[j]);
            out[k] += prod;
        }
    return out;
}

std::vector<double> pie_rhs(const PieModel& p, const Func& v, const std::vector<double>& grid) {
    std::vector<double> out(grid.size(), 0.0);
    for (int k = 1; k <= p.degree(); ++k) {
        if (p.Ck(k).is_zero()) continue;
        auto y = tp_apply_scalar(p.Ck(k), std::vector<Func>(static_cast<std::size_t>(k), v), grid);
        for (std::size_t i = 0; i < grid.size(); ++i) out[i] += y[i];
    }
    return out;
}

}  // namespace

TEST_CASE("Fisher model compiles to the expected operators", "[pde2pie]") {
    PieModel p = compile(models::fisher());
    CHECK(p.T.R1(0, 0) == "(s-1)*theta_1"_p);
    REQUIRE(p.degree() == 2);
    CHECK(p.Ck(1).terms.size() == 2);
    CHECK(p.Ck(2).terms.size() == 1);
    CHECK(p.Ck(1).terms[0].factors[0] == PiOp::identity());
    CHECK(p.Ck(1).terms[1].factors[0] == Rational(5) * p.T);
    CHECK(p.Ck(2).terms[0].factors[0] == Rational(-1) * p.T);
    CHECK(p.Ck(2).terms[0].factors[1] == p.T);
}

TEST_CASE("compiled PIE reproduces the PDE right-hand side", "[pde2pie][property]") {
    std::vector<double> grid{0.1, 0.3, 0.55, 0.8, 0.95};
    std::vector<Func> inputs{[](double x) { return std::sin(4 * x) + 1; }, [](double x) { return x * x - 0.4; }};
    std::vector<PdeModel> ms{models::fisher(), models::heat(), models::burgers_reaction(2)};
    PdeModel var_coef = models::fisher();
    var_coef.terms[1].coef = "1 + s^2"_p;
    ms.push_back(var_coef);
    PdeModel robin = models::fisher(3, -2);
    robin.domain = Domain(0, 2);
    robin.bc = BcSpec(2, {{1, 0, 0, 0}, {0, 0, 1, 1}});
    ms.push_back(robin);
    for (auto& m : ms) {
        PieModel p = compile(m);
        std::vector<double> g;
        for (double x : grid) g.push_back(m.domain.lo() + x * (m.domain.hi() - m.domain.lo()));
        for (auto& v : inputs) {
            auto a = pde_rhs(m, v, g), b = pie_rhs(p, v, g);
            for (std::size_t k = 0; k < g.size(); ++k) CHECK(b[k] == Approx(a[k]).margin(1e-11));
        }
    }
}

TEST_CASE("model validation", "[pde2pie]") {
    PdeModel m = models::heat();
    m.terms.push_back({Poly(1), {0, 0, 0}});
    CHECK_THROWS_AS(compile(m), std::invalid_argument);
    m = models::heat();
    m.terms[0].coef = "theta_1"_p;
    CHECK_THROWS_AS(compile(m), std::invalid_argument);
    m = models::heat();
    m.terms[0].exponents = {0, 1};
    CHECK_THROWS_AS(compile(m), std::invalid_argument);
    m = models::heat();
    m.bc = BcSpec(2, {{0, 1, 0, 0}, {0, 0, 0, 1}});
    CHECK_THROWS_AS(compile(m), FullRankViolation);
}

TEST_CASE("ball functional", "[pde2pie]") {
    PieModel p = compile(models::fisher());
    DistPoly g = build_g_r(p, Rational(1));
    CHECK(g.constant == 1);
    CHECK(g.component(2).kernel == -vec_TT(p).kernel);
    CHECK(g.eval([](double) { return 1.0; }) == Approx(1.0 - 1.0 / 120).epsilon(1e-12));
    CHECK_THROWS_AS(build_g_r(p, Rational(0)), std::invalid_argument);
}

TEST_CASE("energy derivative kernels for Fisher", "[pde2pie]") {
    PieModel p = compile(models::fisher());
    const PiOp& T = p.T;
    FPiOp k2 = Rational(2) * vec_tensor_pi_folded(TensorPiOp::single({PiOp::identity(), T})) +
               Rational(10) * vec_tensor_pi(TensorPiOp::single({T, T}));
    FPiOp k3 = Rational(-2) * vec_tensor_pi(TensorPiOp::single({T, T, T}));
    // d/dt int u^2 = 2 int u u_t along the PDE
    Func v = [](double x) { return std::cos(5 * x) - 0.5; };
    auto gq = gauss_on(0.0, 1.0, 32);
    auto u = apply_scalar(T, v, gq.x);
    auto rhs = pde_rhs(models::fisher(), v, gq.x);
    double want = 0;
    for (std::size_t i = 0; i < u.size(); ++i) want += 2 * gq.w[i] * u[i] * rhs[i];
    CHECK(fpi_eval(k2, v) + fpi_eval(k3, v) == Approx(want).epsilon(1e-9));
}

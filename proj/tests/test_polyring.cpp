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

#include "pies/polyring.hpp"
#include "pies/quadrature.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace pies;
using Catch::Approx;

namespace {

Poly random_poly(std::mt19937& rng, int nvars, int maxdeg, int nterms) {
    std::uniform_int_distribution<int> deg(0, maxdeg), num(-9, 9), den(1, 5);
    Poly p;
    for (int k = 0; k < nterms; ++k) {
        Exponent e{};
        int left = deg(rng);
        for (int v = 0; v < nvars && left > 0; ++v) {
            std::uniform_int_distribution<int> take(0, left);
            int t = take(rng);
            e[v] = static_cast<std::uint8_t>(t);
            left -= t;
        }
        p.add_term(e, Rational(num(rng), den(rng)));
    }
    return p;
}

}  // namespace

TEST_CASE("add keeps canonical form", "[polyring]") {
    Poly s = Poly::variable(var::s), t = Poly::variable(var::theta(1));
    CHECK((s + (-s)).is_zero());
    CHECK(s * t + t * s == Rational(2) * (s * t));
    CHECK((s * s + 1) + s == "s^2 + s + 1"_p);
}

TEST_CASE("mul", "[polyring]") {
    Poly s = Poly::variable(var::s), t = Poly::variable(var::theta(1));
    CHECK((s - t) * (s + t) == s * s - t * t);
    CHECK((s * Poly()).is_zero());
    Poly p = (s - 1) * t;
    CHECK(p.eval({{var::s, 0.5}, {var::theta(1), 0.25}}) == Approx(-0.125).margin(1e-15));
    CHECK(((s + 1) * (t - 2)).degree() == 2);
}

TEST_CASE("integrate", "[polyring]") {
    Poly t = Poly::variable(var::theta(1)), s = Poly::variable(var::s);
    CHECK(Poly(1).integrate(var::theta(1), Poly(0), Poly(1)) == Poly(1));
    CHECK(t.integrate(var::theta(1), Poly(0), s) == Rational(1, 2) * s * s);
    Poly k = (s - 1) * t;
    Poly r = k.integrate(var::s, t, Poly(1));
    CHECK_FALSE(r.contains(var::s));
    double th = 0.3;
    double q = integrate([&](double x) { return (x - 1) * th; }, th, 1.0);
    CHECK(r.eval({{var::theta(1), th}}) == Approx(q).epsilon(1e-12));
    CHECK_THROWS_AS(t.integrate(var::theta(1), Poly(0), t), std::invalid_argument);
}

TEST_CASE("substitute and rename", "[polyring]") {
    Poly s = Poly::variable(var::s), t1 = Poly::variable(var::theta(1)), t2 = Poly::variable(var::theta(2));
    CHECK((s * s).substitute(var::s, s - t1) == s * s - 2 * s * t1 + t1 * t1);
    CHECK(t1.substitute(var::theta(1), t2) == t2);
    CHECK(s.substitute(var::s, s - t1) == s - t1);
    CHECK((s * t1 * t1).rename(var::s, var::theta(1)) == t1 * t1 * t1);
}

TEST_CASE("eval", "[polyring]") {
    CHECK("s^2 - s"_p.eval({{var::s, 1.0}}) == 0.0);
    CHECK(Poly(1).eval(std::map<VarId, double>{}) == 1.0);
    CHECK("(s-1)*theta_1"_p.eval({{var::s, 0.5}, {var::theta(1), 0.25}}) == Approx(-0.125));
    CHECK_THROWS_AS("s*theta_1"_p.eval({{var::s, 1.0}}), std::invalid_argument);
}

TEST_CASE("parse and print round trip", "[polyring]") {
    Poly p = "(s-1)*theta_1 + 2/3*s^2*eta_2 - 0.25"_p;
    CHECK(parse_poly(p.to_string()) == p);
    CHECK("theta"_p == Poly::variable(var::theta(1)));
    CHECK("1e-2*s"_p == Rational(1, 100) * Poly::variable(var::s));
    CHECK_THROWS_AS(parse_poly("s +"), std::invalid_argument);
    CHECK_THROWS_AS(parse_poly("x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_poly("1/s"), std::invalid_argument);
}

TEST_CASE("ring axioms on random polynomials", "[polyring][property]") {
    std::mt19937 rng(7);
    for (int k = 0; k < 30; ++k) {
        Poly p = random_poly(rng, 3, 3, 4), q = random_poly(rng, 3, 3, 4), r = random_poly(rng, 3, 3, 4);
        CHECK((p + q) * r == p * r + q * r);
        CHECK(p * q == q * p);
        CHECK((p * q) * r == p * (q * r));
        CHECK(p - p == Poly());
    }
}

TEST_CASE("integrate is linear", "[polyring][property]") {
    std::mt19937 rng(11);
    Poly lo = "theta_1"_p, hi = Poly(1);
    for (int k = 0; k < 20; ++k) {
        Poly p = random_poly(rng, 3, 3, 4), q = random_poly(rng, 3, 3, 4);
        Rational a(3, 7), b(-2);
        CHECK((a * p + b * q).integrate(var::s, lo, hi) ==
              a * p.integrate(var::s, lo, hi) + b * q.integrate(var::s, lo, hi));
    }
}

TEST_CASE("fundamental theorem against quadrature", "[polyring][property]") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        Poly p = random_poly(rng, 3, 4, 5);
        Poly c = Poly(Rational(-1, 2)), d = "theta_1 + 1"_p;
        Poly I = p.integrate(var::s, c, d);
        double t1 = u(rng), t2 = u(rng);
        std::array<double, kMaxVars> x{};
        x[var::theta(1)] = t1;
        x[var::theta(2)] = t2;
        double q = integrate(
            [&](double sv) {
                auto y = x;
                y[var::s] = sv;
                return p.eval(y.data());
            },
            -0.5, t1 + 1.0);
        double exact = I.eval(x.data());
        CHECK(std::abs(exact - q) <= 1e-10 * std::max(1.0, std::abs(q)));
    }
}

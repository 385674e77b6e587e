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
#include <random>

using namespace pies;
using Catch::Approx;

namespace {

// exact integral of a kernel over the ordered simplex with all inputs equal to one
Rational simplex_integral(const FPiOp& k) {
    Poly acc = k.kernel;
    for (int i = 1; i <= k.degree; ++i) {
        Poly hi = i < k.degree ? Poly::variable(var::theta(i + 1)) : Poly(k.domain.b);
        acc = acc.integrate(var::theta(i), Poly(k.domain.a), hi);
    }
    return acc.constant_term();
}

double integral_of_product(const TensorPiOp& h, const Func& v) {
    auto g = gauss_on(h.domain.lo(), h.domain.hi(), 32);
    std::vector<Func> xs(static_cast<std::size_t>(h.degree), v);
    auto y = tp_apply_scalar(h, xs, g.x);
    double acc = 0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += g.w[i] * y[i];
    return acc;
}

Poly random_st(std::mt19937& rng, int deg) {
    std::uniform_int_distribution<int> c(-3, 3);
    Poly p;
    for (int i = 0; i <= deg; ++i)
        for (int j = 0; i + j <= deg; ++j) {
            Exponent e{};
            e[var::s] = static_cast<std::uint8_t>(i);
            e[var::theta(1)] = static_cast<std::uint8_t>(j);
            p.add_term(e, Rational(c(rng), 2));
        }
    return p;
}

Poly random_theta(std::mt19937& rng, int d, int deg) {
    std::uniform_int_distribution<int> c(-3, 3), ex(0, deg);
    Poly p;
    for (int k = 0; k < 4; ++k) {
        Exponent e{};
        for (int i = 1; i <= d; ++i) e[var::theta(i)] = static_cast<std::uint8_t>(ex(rng));
        p.add_term(e, Rational(c(rng)));
    }
    return p;
}

const PiOp& dirichlet_T() {
    static const PiOp T = build_T(models::dirichlet2(), Domain());
    return T;
}

}  // namespace

TEST_CASE("vec of T tensor T at the constant input", "[fpi]") {
    FPiOp k = vec_tensor_pi(TensorPiOp::single({dirichlet_T(), dirichlet_T()}));
    CHECK(simplex_integral(k) == Rational(1, 120));
    CHECK(fpi_eval(k, [](double) { return 1.0; }) == Approx(1.0 / 120).epsilon(1e-12));
}

TEST_CASE("multiplier fold of I tensor T", "[fpi]") {
    FPiOp k = vec_tensor_pi_folded(TensorPiOp::single({PiOp::identity(), dirichlet_T()}));
    CHECK(k.kernel == "2*theta_1*theta_2 - 2*theta_1"_p);
    CHECK(simplex_integral(k) == Rational(-1, 12));
}

TEST_CASE("vec reproduces the integral of the tensor output", "[fpi][property]") {
    std::mt19937 rng(17);
    const Func v = [](double x) { return std::cos(2 * x) + x; };
    for (int d = 1; d <= 3; ++d)
        for (int trial = 0; trial < 3; ++trial) {
            std::vector<PiOp> fs;
            for (int i = 0; i < d; ++i) fs.push_back(PiOp::scalar(Poly(), random_st(rng, 2), random_st(rng, 2)));
            TensorPiOp h = TensorPiOp::single(fs);
            FPiOp k = vec_tensor_pi(h);
            CHECK(fpi_eval(k, v) == Approx(integral_of_product(h, v)).epsilon(1e-9).margin(1e-11));
        }
}

TEST_CASE("folded vec with one multiplier factor", "[fpi][property]") {
    std::mt19937 rng(23);
    const Func v = [](double x) { return std::exp(-x) - 0.3; };
    for (int d = 1; d <= 3; ++d)
        for (int m = 0; m < d; ++m) {
            std::vector<PiOp> fs;
            for (int i = 0; i < d; ++i) {
                Poly r0 = i == m ? Poly(1) + "s"_p : Poly();
                fs.push_back(PiOp::scalar(r0, random_st(rng, 2), random_st(rng, 2)));
            }
            TensorPiOp h = TensorPiOp::single(fs);
            FPiOp k = vec_tensor_pi_folded(h);
            CHECK(fpi_eval(k, v) == Approx(integral_of_product(h, v)).epsilon(1e-9).margin(1e-11));
        }
    CHECK_THROWS_AS(vec_tensor_pi(TensorPiOp::single({PiOp::identity(), dirichlet_T()})), std::invalid_argument);
    CHECK_THROWS_AS(vec_tensor_pi_folded(TensorPiOp::single({PiOp::identity(), PiOp::identity()})),
                    std::invalid_argument);
}

TEST_CASE("monomial fast path agrees with the general sum", "[fpi][property]") {
    std::mt19937 rng(31);
    std::uniform_int_distribution<int> ex(0, 3), side(0, 1);
    Domain dom;
    for (int trial = 0; trial < 20; ++trial) {
        int d = 1 + trial % 4;
        std::vector<MonoFactor> mf;
        std::vector<PiOp> ops;
        for (int i = 0; i < d; ++i) {
            MonoFactor f{ex(rng), ex(rng), side(rng) == 1};
            mf.push_back(f);
            Exponent e{};
            e[var::s] = static_cast<std::uint8_t>(f.p);
            e[var::theta(1)] = static_cast<std::uint8_t>(f.q);
            Poly mono = Poly::monomial(e, 1);
            ops.push_back(f.lower ? PiOp::scalar(Poly(), mono, Poly()) : PiOp::scalar(Poly(), Poly(), mono));
        }
        CHECK(vec_monomials(mf, dom) == detail::vec_term(ops, dom));
    }
}

TEST_CASE("box integral splits into ordered simplices", "[fpi][property]") {
    std::mt19937 rng(41);
    for (int d = 1; d <= 4; ++d) {
        Poly K = random_theta(rng, d, 3);
        auto [box, parts] = split_integral_check(K, d, Domain(-1, 2));
        CHECK(box == parts);
    }
}

TEST_CASE("canonicalize folds region kernels onto the identity simplex", "[fpi]") {
    // the same kernel on every region integrates to its box integral
    Poly K = "theta_1^2*theta_2 + 3*theta_3"_p;
    std::map<Permutation, Poly> raw;
    for (auto& a : all_permutations(3)) raw[a] = K;
    FPiOp k = canonicalize(raw, Domain());
    Poly box = K;
    for (int i = 1; i <= 3; ++i) box = box.integrate(var::theta(i), Poly(0), Poly(1));
    CHECK(simplex_integral(k) == box.constant_term());
    CHECK(fold_region("theta_2"_p, {2, 1}) == "theta_1"_p);
}

TEST_CASE("tensor product of functionals multiplies values", "[fpi][property]") {
    std::mt19937 rng(43);
    const Func v = [](double x) { return 1 + std::sin(3 * x); };
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 3; ++j) {
            FPiOp k{i, random_theta(rng, i, 2), Domain()}, g{j, random_theta(rng, j, 2), Domain()};
            double lhs = fpi_eval(fpi_tensor(k, g), v), rhs = fpi_eval(k, v) * fpi_eval(g, v);
            CHECK(lhs == Approx(rhs).epsilon(1e-10).margin(1e-12));
        }
}

TEST_CASE("distributed polynomial product", "[fpi][property]") {
    std::mt19937 rng(47);
    const Func v = [](double x) { return x - 0.2; };
    DistPoly p(Domain(), 2, Rational(3, 2)), q(Domain(), 1, Rational(-1));
    p.kernel(1) = random_theta(rng, 1, 2);
    p.kernel(2) = random_theta(rng, 2, 2);
    q.kernel(1) = random_theta(rng, 1, 2);
    DistPoly pq = distpoly_mul(p, q);
    CHECK(pq.max_degree() == 3);
    CHECK(pq.eval(v) == Approx(p.eval(v) * q.eval(v)).epsilon(1e-10));
    CHECK((p + q) - q == p);
    CHECK((p + q).eval(v) == Approx(p.eval(v) + q.eval(v)).epsilon(1e-12));
}

TEST_CASE("tensor operator validation and application", "[tensor_pi]") {
    TensorPiOp h(2, Domain());
    CHECK_THROWS_AS(h.add_term({dirichlet_T()}), std::invalid_argument);
    CHECK_THROWS_AS(h.add_term({dirichlet_T(), PiOp::identity(1, Domain(0, 2))}), std::invalid_argument);
    PiOp U = build_U_hat(2, Domain());
    CHECK(U.rows() == 2 * mu(2));
    h.add_term({U, dirichlet_T()});
    CHECK(h.output_rows() == 12);
    CHECK_THROWS_AS(h.add_term({dirichlet_T(), dirichlet_T()}), std::invalid_argument);
    auto m = tp_apply(h, {{[](double) { return 1.0; }}, {[](double) { return 1.0; }}}, {0.5});
    // row 0 is (int_0^s 1) * (T 1)(s) with monomial 1 on the lower side
    CHECK(m(0, 0) == Approx(0.5 * (-0.125)).margin(1e-14));
    CHECK(m(12 - 1, 0) == Approx((1.0 - 0.125) / 3 * (-0.125)).margin(1e-14));
}

TEST_CASE("monomial basis ordering", "[tensor_pi]") {
    auto m = monomials_st(2);
    std::vector<std::pair<int, int>> want{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    CHECK(m == want);
    CHECK(mu(4) == 15);
    PiOp U = build_U_hat(1, Domain());
    CHECK(row_of(U, 1).R1(0, 0) == "s"_p);
    CHECK(row_of(U, 5).R2(0, 0) == "theta_1"_p);
}

TEST_CASE("multiplier composition into the first factor", "[tensor_pi]") {
    TensorPiOp h = TensorPiOp::single({dirichlet_T(), dirichlet_T()});
    TensorPiOp mh = tp_scale_compose(PiOp::multiplier("2*s"_p), h);
    auto y = tp_apply_scalar(mh, {[](double) { return 1.0; }, [](double) { return 1.0; }}, {0.25});
    double t = 0.25 * (0.25 - 1) / 2;
    CHECK(y[0] == Approx(0.5 * t * t).margin(1e-14));
    CHECK_THROWS_AS(tp_scale_compose(dirichlet_T(), h), std::invalid_argument);
}

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

#ifndef PIES_PDE2PIE_HPP
#define PIES_PDE2PIE_HPP

#include "pies/fpi.hpp"

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pies {

struct PdeTerm {
    Poly coef;                   // polynomial in s
    std::vector<int> exponents;  // powers of u, u_s, ..., u^{(n)}

    int total() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }
};

// u_t = sum_i c_i(s) u^{a_i0} (u_s)^{a_i1} ... (u^{(n)})^{a_in} with B [D^{n-1}u(a); D^{n-1}u(b)] = 0
struct PdeModel {
    Domain domain;
    int n = 2;
    std::vector<PdeTerm> terms;
    BcSpec bc;

    void validate() const {
        if (terms.empty()) throw std::invalid_argument("PDE needs at least one term");
        if (bc.n != n) throw std::invalid_argument("boundary condition order differs from PDE order");
        for (auto& t : terms) {
            if (static_cast<int>(t.exponents.size()) != n + 1)
                throw std::invalid_argument("exponent vector must have n+1 entries");
            for (int e : t.exponents)
                if (e < 0) throw std::invalid_argument("negative exponent");
            if (t.total() == 0) throw std::invalid_argument("constant source term is outside the PDE class");
            for (auto& [e, c] : t.coef.terms())
                for (int v = 1; v < kMaxVars; ++v)
                    if (e[v]) throw std::invalid_argument("coefficients must be polynomials in s");
        }
    }
};

struct PieModel {
    PiOp T;
    std::vector<TensorPiOp> C;  // C[k-1] has tensor degree k
    Domain domain;

    int degree() const { return static_cast<int>(C.size()); }
    const TensorPiOp& Ck(int k) const { return C.at(static_cast<std::size_t>(k - 1)); }
};

inline PieModel compile(const PdeModel& pde) {
    pde.validate();
    PieModel pie;
    pie.domain = pde.domain;
    pie.T = build_T(pde.bc, pde.domain);
    std::vector<PiOp> R;
    R.push_back(pie.T);
    for (int j = 1; j <= pde.n; ++j) R.push_back(build_Rj(pde.bc, j, pde.domain));
    int d = 0;
    for (auto& t : pde.terms) d = std::max(d, t.total());
    for (int k = 1; k <= d; ++k) pie.C.emplace_back(k, pde.domain);
    for (auto& t : pde.terms) {
        std::vector<PiOp> factors;
        for (int j = 0; j <= pde.n; ++j)
            for (int e = 0; e < t.exponents[j]; ++e) factors.push_back(R[j]);
        TensorPiOp h = TensorPiOp::single(std::move(factors));
        TensorPiOp mh = tp_scale_compose(PiOp::multiplier(t.coef, pde.domain), h);
        pie.C[static_cast<std::size_t>(t.total() - 1)] = pie.C[static_cast<std::size_t>(t.total() - 1)] + mh;
    }
    return pie;
}

inline FPiOp vec_TT(const PieModel& pie) { return vec_tensor_pi(TensorPiOp::single({pie.T, pie.T})); }

inline DistPoly build_g_r(const PieModel& pie, const Rational& r) {
    if (r <= 0) throw std::invalid_argument("ball radius must be positive");
    DistPoly g(pie.domain, 2, r * r);
    g.kernel(2) = -vec_TT(pie).kernel;
    return g;
}

// Human-readable account of C: each term of C_k with its coefficient and factor tags
// ("T" or "R<j>"), found by matching the compiled factors against T and R_j.
struct TermSummary {
    int degree = 0;
    std::string coef;
    std::vector<std::string> tags;
};

inline std::vector<TermSummary> summarize(const PdeModel& pde, const PieModel& pie) {
    std::vector<PiOp> R{pie.T};
    for (int j = 1; j <= pde.n; ++j) R.push_back(build_Rj(pde.bc, j, pde.domain));
    auto tag = [](int j) { return j == 0 ? std::string("T") : "R" + std::to_string(j); };
    std::vector<TermSummary> out;
    std::vector<std::size_t> seen(pie.C.size(), 0);
    for (auto& t : pde.terms) {
        const int k = t.total();
        const auto& term = pie.Ck(k).terms.at(seen[static_cast<std::size_t>(k - 1)]++);
        TermSummary ts{k, t.coef.to_string(), {}};
        const PiOp M = PiOp::multiplier(t.coef, pde.domain);
        for (std::size_t f = 0; f < term.factors.size(); ++f) {
            std::string name = "?";
            for (int j = 0; j <= pde.n; ++j)
                if (term.factors[f] == (f == 0 ? compose(M, R[j]) : R[j])) {
                    name = tag(j);
                    break;
                }
            ts.tags.push_back(name);
        }
        out.push_back(std::move(ts));
    }
    return out;
}

// Standard models used by the tests and the CLI.
namespace models {

inline BcSpec dirichlet2() {
    return BcSpec(2, {{1, 0, 0, 0}, {0, 0, 1, 0}});
}

// u_t = u_ss + alpha u + beta u^2 on [0,1], Dirichlet
inline PdeModel fisher(const Rational& alpha = 5, const Rational& beta = -1) {
    PdeModel m;
    m.n = 2;
    m.bc = dirichlet2();
    m.terms.push_back({Poly(1), {0, 0, 1}});
    m.terms.push_back({Poly(alpha), {1, 0, 0}});
    m.terms.push_back({Poly(beta), {2, 0, 0}});
    return m;
}

inline PdeModel heat() {
    PdeModel m;
    m.n = 2;
    m.bc = dirichlet2();
    m.terms.push_back({Poly(1), {0, 0, 1}});
    return m;
}

// u_t = u_ss - u u_s + r u
inline PdeModel burgers_reaction(const Rational& r = 1) {
    PdeModel m;
    m.n = 2;
    m.bc = dirichlet2();
    m.terms.push_back({Poly(1), {0, 0, 1}});
    m.terms.push_back({Poly(-1), {1, 1, 0}});
    m.terms.push_back({Poly(r), {1, 0, 0}});
    return m;
}

}  // namespace models

}  // namespace pies

#endif

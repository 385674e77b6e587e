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

#ifndef PIES_FPI_HPP
#define PIES_FPI_HPP

#include "pies/tensor_pi.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace pies {

// Functional on L2[Omega^d] with one kernel on the ordered simplex a <= theta_1 <= ... <= theta_d <= b.
struct FPiOp {
    int degree = 1;
    Poly kernel;
    Domain domain;

    friend bool operator==(const FPiOp& x, const FPiOp& y) {
        return x.degree == y.degree && x.domain == y.domain && x.kernel == y.kernel;
    }
    friend FPiOp operator+(FPiOp x, const FPiOp& y) {
        if (x.degree != y.degree) throw std::invalid_argument("F-PI degree mismatch");
        x.kernel += y.kernel;
        return x;
    }
    friend FPiOp operator*(const Rational& c, FPiOp x) {
        x.kernel *= c;
        return x;
    }
};

using Permutation = std::vector<int>;  // 1-based, alpha_1..alpha_d

inline std::vector<Permutation> all_permutations(int d) {
    Permutation p(static_cast<std::size_t>(d));
    std::iota(p.begin(), p.end(), 1);
    std::vector<Permutation> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

// Region alpha is theta_{alpha_1} <= ... <= theta_{alpha_d}; map it onto the identity simplex.
inline Poly fold_region(const Poly& k, const Permutation& alpha) {
    std::array<VarId, kMaxVars> t;
    for (int i = 0; i < kMaxVars; ++i) t[i] = i;
    for (std::size_t pos = 0; pos < alpha.size(); ++pos) t[var::theta(alpha[pos])] = var::theta(static_cast<int>(pos) + 1);
    return k.rename(t);
}

inline FPiOp canonicalize(const std::map<Permutation, Poly>& raw, const Domain& dom) {
    if (raw.empty()) throw std::invalid_argument("canonicalize: no kernels");
    const int d = static_cast<int>(raw.begin()->first.size());
    FPiOp out{d, Poly(), dom};
    for (auto& [alpha, k] : raw) {
        if (static_cast<int>(alpha.size()) != d) throw std::invalid_argument("canonicalize: inconsistent degree");
        out.kernel += fold_region(k, alpha);
    }
    return out;
}

inline double fpi_eval(const FPiOp& k, const Func& x, int nodes = 24) {
    if (k.kernel.is_zero()) return 0.0;
    const int d = k.degree;
    std::array<double, kMaxVars> pt{};
    return integrate_simplex(
        [&](const double* th) {
            double prod = 1.0;
            for (int i = 0; i < d; ++i) {
                pt[var::theta(i + 1)] = th[i];
                prod *= x(th[i]);
            }
            return prod * k.kernel.eval(pt.data());
        },
        d, k.domain.lo(), k.domain.hi(), nodes);
}

// Exact box integral versus the sum of the per-ordering simplex integrals.
inline std::pair<Rational, Rational> split_integral_check(const Poly& K, int d, const Domain& dom) {
    Poly box = K;
    for (int i = 1; i <= d; ++i) box = box.integrate(var::theta(i), Poly(dom.a), Poly(dom.b));
    Rational rhs = 0;
    for (auto& alpha : all_permutations(d)) {
        Poly acc = K;
        for (int pos = 0; pos < d; ++pos) {
            Poly upper = pos + 1 < d ? Poly::variable(var::theta(alpha[pos + 1])) : Poly(dom.b);
            acc = acc.integrate(var::theta(alpha[pos]), Poly(dom.a), upper);
        }
        rhs += acc.constant_term();
    }
    return {box.constant_term(), rhs};
}

// Interleaving product of a degree-i and a degree-j functional.
inline FPiOp fpi_tensor(const FPiOp& k, const FPiOp& g) {
    if (!(k.domain == g.domain)) throw std::invalid_argument("fpi_tensor: domain mismatch");
    const int i = k.degree, j = g.degree, n = i + j;
    if (n > kMaxTheta) throw std::invalid_argument("fpi_tensor: degree exceeds variable universe");
    FPiOp out{n, Poly(), k.domain};
    if (k.kernel.is_zero() || g.kernel.is_zero()) return out;
    std::vector<bool> pick(static_cast<std::size_t>(n), false);
    std::fill(pick.begin(), pick.begin() + i, true);
    std::sort(pick.begin(), pick.end());
    do {
        std::array<VarId, kMaxVars> tk, tg;
        for (int v = 0; v < kMaxVars; ++v) tk[v] = tg[v] = v;
        int a = 0, b = 0;
        for (int pos = 0; pos < n; ++pos) {
            if (pick[pos]) tk[var::theta(++a)] = var::theta(pos + 1);
            else tg[var::theta(++b)] = var::theta(pos + 1);
        }
        out.kernel += k.kernel.rename(tk) * g.kernel.rename(tg);
    } while (std::next_permutation(pick.begin(), pick.end()));
    return out;
}

struct DistPoly {
    Rational constant = 0;
    std::vector<FPiOp> components;  // components[k-1] has degree k
    Domain domain;

    DistPoly() = default;
    explicit DistPoly(Domain dom, int max_degree = 0, Rational c = 0) : constant(std::move(c)), domain(std::move(dom)) {
        for (int k = 1; k <= max_degree; ++k) components.push_back(FPiOp{k, Poly(), domain});
    }
    int max_degree() const { return static_cast<int>(components.size()); }
    void ensure_degree(int d) {
        while (max_degree() < d) components.push_back(FPiOp{max_degree() + 1, Poly(), domain});
    }
    Poly& kernel(int k) {
        ensure_degree(k);
        return components[static_cast<std::size_t>(k - 1)].kernel;
    }
    const FPiOp& component(int k) const { return components.at(static_cast<std::size_t>(k - 1)); }
    void add(const FPiOp& f) { kernel(f.degree) += f.kernel; }

    double eval(const Func& x, int nodes = 24) const {
        double acc = constant.get_d();
        for (auto& c : components) acc += fpi_eval(c, x, nodes);
        return acc;
    }
    friend DistPoly operator+(DistPoly p, const DistPoly& q) {
        p.constant += q.constant;
        for (auto& c : q.components) p.add(c);
        return p;
    }
    friend DistPoly operator*(const Rational& c, DistPoly p) {
        p.constant *= c;
        for (auto& f : p.components) f.kernel *= c;
        return p;
    }
    friend DistPoly operator-(const DistPoly& p, const DistPoly& q) { return p + Rational(-1) * q; }
    friend bool operator==(const DistPoly& p, const DistPoly& q) {
        if (p.constant != q.constant) return false;
        const int d = std::max(p.max_degree(), q.max_degree());
        for (int k = 1; k <= d; ++k) {
            Poly a = k <= p.max_degree() ? p.component(k).kernel : Poly();
            Poly b = k <= q.max_degree() ? q.component(k).kernel : Poly();
            if (a != b) return false;
        }
        return true;
    }
};

inline DistPoly distpoly_mul(const DistPoly& p, const DistPoly& q) {
    if (!(p.domain == q.domain)) throw std::invalid_argument("distpoly_mul: domain mismatch");
    DistPoly r(p.domain, p.max_degree() + q.max_degree(), p.constant * q.constant);
    for (auto& f : p.components) r.kernel(f.degree) += f.kernel * q.constant;
    for (auto& g : q.components) r.kernel(g.degree) += g.kernel * p.constant;
    for (auto& f : p.components)
        for (auto& g : q.components) {
            if (f.kernel.is_zero() || g.kernel.is_zero()) continue;
            r.add(fpi_tensor(f, g));
        }
    return r;
}

namespace detail {

// Sum over permutations and s-segments for one tensor term whose factors are scalar 2-PI
// operators; `mult` >= 0 marks a multiplier factor evaluated at its own variable instead.
inline Poly vec_term(const std::vector<PiOp>& f, const Domain& dom, int mult = -1, const Poly& c = Poly()) {
    const int d = static_cast<int>(f.size());
    const Poly A(dom.a), B(dom.b);
    Poly out;
    std::vector<std::array<Poly, 2>> moved(static_cast<std::size_t>(d));
    for (auto& sigma : all_permutations(d)) {
        // factor i is attached to theta_{sigma[i]}
        for (int i = 0; i < d; ++i) {
            if (i == mult) continue;
            moved[i][0] = f[i].R1(0, 0).rename(var::theta(1), var::theta(sigma[i]));
            moved[i][1] = f[i].R2(0, 0).rename(var::theta(1), var::theta(sigma[i]));
        }
        if (mult >= 0) {
            const int pm = sigma[mult];
            Poly prod = c;
            for (int i = 0; i < d && !prod.is_zero(); ++i)
                if (i != mult) prod *= moved[i][sigma[i] < pm ? 0 : 1];
            if (!prod.is_zero()) out += prod.substitute(var::s, Poly::variable(var::theta(pm)));
            continue;
        }
        for (int j = 0; j <= d; ++j) {
            Poly prod(1);
            for (int i = 0; i < d && !prod.is_zero(); ++i) prod *= moved[i][sigma[i] <= j ? 0 : 1];
            if (prod.is_zero()) continue;
            Poly lo = j >= 1 ? Poly::variable(var::theta(j)) : A;
            Poly hi = j + 1 <= d ? Poly::variable(var::theta(j + 1)) : B;
            out += prod.integrate(var::s, lo, hi);
        }
    }
    return out;
}

inline void require_scalar(const TensorPiOp& h) {
    for (auto& t : h.terms)
        for (auto& f : t.factors)
            if (f.rows() != 1 || f.cols() != 1) throw std::invalid_argument("vec: factors must be scalar");
}

}  // namespace detail

inline FPiOp vec_tensor_pi(const TensorPiOp& h) {
    detail::require_scalar(h);
    FPiOp out{h.degree, Poly(), h.domain};
    for (auto& t : h.terms) {
        for (auto& f : t.factors)
            if (!f.is_two_pi()) throw std::invalid_argument("vec: multiplier factor present; fold it first");
        out.kernel += detail::vec_term(t.factors, h.domain);
    }
    return out;
}

// vec for terms whose factors may carry multipliers: expands each 3-PI factor into its
// multiplier and 2-PI parts; terms with two or more multiplier parts have no kernel form.
inline FPiOp vec_tensor_pi_folded(const TensorPiOp& h) {
    detail::require_scalar(h);
    FPiOp out{h.degree, Poly(), h.domain};
    const int d = h.degree;
    for (auto& t : h.terms) {
        std::vector<PiOp> two(t.factors);
        for (auto& f : two) f.R0 = PolyMatrix(1, 1);
        out.kernel += detail::vec_term(two, h.domain);
        int nmult = 0;
        for (int m = 0; m < d; ++m) {
            const Poly& c = t.factors[m].R0(0, 0);
            if (c.is_zero()) continue;
            if (++nmult > 1) throw std::invalid_argument("vec: more than one multiplier factor in a term");
            out.kernel += detail::vec_term(two, h.domain, m, c);
        }
    }
    return out;
}

// Fast path for products of monomial factors: `lower[i]` true means kernel s^p theta^q on theta < s.
struct MonoFactor {
    int p = 0, q = 0;
    bool lower = true;
};

inline Poly vec_monomials(const std::vector<MonoFactor>& fs, const Domain& dom) {
    const int d = static_cast<int>(fs.size());
    std::vector<int> L, R;
    int A = 0;
    for (int i = 0; i < d; ++i) {
        (fs[i].lower ? L : R).push_back(i);
        A += fs[i].p;
    }
    const int nL = static_cast<int>(L.size());
    Poly lo = nL >= 1 ? Poly::variable(var::theta(nL)) : Poly(dom.a);
    Poly hi = nL + 1 <= d ? Poly::variable(var::theta(nL + 1)) : Poly(dom.b);
    Poly seg = (hi.pow(static_cast<unsigned>(A + 1)) - lo.pow(static_cast<unsigned>(A + 1))) *
               (Rational(1) / (A + 1));
    Poly perms;
    std::vector<int> pl(L), pr(R);
    std::sort(pl.begin(), pl.end());
    do {
        Exponent eL{};
        for (int k = 0; k < nL; ++k) eL[var::theta(k + 1)] = static_cast<std::uint8_t>(fs[pl[k]].q);
        std::sort(pr.begin(), pr.end());
        do {
            Exponent e = eL;
            for (std::size_t k = 0; k < pr.size(); ++k)
                e[var::theta(nL + static_cast<int>(k) + 1)] = static_cast<std::uint8_t>(fs[pr[k]].q);
            perms.add_term(e, 1);
        } while (std::next_permutation(pr.begin(), pr.end()));
    } while (std::next_permutation(pl.begin(), pl.end()));
    return seg * perms;
}

}  // namespace pies

#endif

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

#ifndef PIES_TENSOR_PI_HPP
#define PIES_TENSOR_PI_HPP

#include "pies/pi_core.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>
#include <vector>

namespace pies {

struct TensorTerm {
    std::vector<PiOp> factors;
};

struct TensorPiOp {
    int degree = 1;
    std::vector<TensorTerm> terms;
    Domain domain;

    TensorPiOp() = default;
    TensorPiOp(int d, Domain dom) : degree(d), domain(std::move(dom)) {
        if (d < 1) throw std::invalid_argument("tensor degree must be positive");
    }
    static TensorPiOp single(std::vector<PiOp> factors) {
        if (factors.empty()) throw std::invalid_argument("empty factor list");
        TensorPiOp h(static_cast<int>(factors.size()), factors.front().domain);
        h.add_term(std::move(factors));
        return h;
    }
    void add_term(std::vector<PiOp> factors) {
        if (static_cast<int>(factors.size()) != degree) throw std::invalid_argument("term arity differs from degree");
        for (auto& f : factors)
            if (!(f.domain == domain)) throw std::invalid_argument("factor domain mismatch");
        if (!terms.empty() && output_dim(factors) != output_rows())
            throw std::invalid_argument("terms must share the output dimension");
        terms.push_back(TensorTerm{std::move(factors)});
    }
    int output_rows() const { return terms.empty() ? 1 : output_dim(terms.front().factors); }
    bool is_zero() const { return terms.empty(); }

    friend TensorPiOp operator+(TensorPiOp x, const TensorPiOp& y) {
        if (x.degree != y.degree) throw std::invalid_argument("tensor degree mismatch");
        for (auto& t : y.terms) x.add_term(t.factors);
        return x;
    }

private:
    static int output_dim(const std::vector<PiOp>& f) {
        int k = 1;
        for (auto& p : f) k *= p.rows();
        return k;
    }
};

// Output at the grid points: rows = Kronecker product of factor rows.
inline Eigen::MatrixXd tp_apply(const TensorPiOp& h, const std::vector<std::vector<Func>>& xs,
                                const std::vector<double>& grid) {
    if (static_cast<int>(xs.size()) != h.degree) throw std::invalid_argument("tp_apply: arity mismatch");
    const auto npts = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h.output_rows(), npts);
    for (auto& term : h.terms) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Ones(1, npts);
        for (int j = 0; j < h.degree; ++j) {
            Eigen::MatrixXd y = apply(term.factors[j], xs[j], grid);
            Eigen::MatrixXd next(acc.rows() * y.rows(), npts);
            for (Eigen::Index a = 0; a < acc.rows(); ++a)
                for (Eigen::Index b = 0; b < y.rows(); ++b)
                    next.row(a * y.rows() + b) = acc.row(a).cwiseProduct(y.row(b));
            acc = std::move(next);
        }
        out += acc;
    }
    return out;
}

// scalar convenience: every slot receives its own scalar function
inline std::vector<double> tp_apply_scalar(const TensorPiOp& h, const std::vector<Func>& xs,
                                           const std::vector<double>& grid) {
    std::vector<std::vector<Func>> slots;
    for (auto& f : xs) slots.push_back({f});
    Eigen::MatrixXd m = tp_apply(h, slots, grid);
    if (m.rows() != 1) throw std::invalid_argument("tp_apply_scalar: output is not scalar");
    return std::vector<double>(m.data(), m.data() + m.size());
}

inline TensorPiOp tp_scale_compose(const PiOp& m, const TensorPiOp& h) {
    if (!m.is_multiplier()) throw std::invalid_argument("tp_scale_compose: left factor is not a multiplier");
    TensorPiOp r(h.degree, h.domain);
    for (auto& t : h.terms) {
        auto f = t.factors;
        f[0] = compose(m, f[0]);
        r.add_term(std::move(f));
    }
    return r;
}

// Monomials s^i theta^j with i + j <= dbar, graded, s-major inside each degree.
inline std::vector<std::pair<int, int>> monomials_st(int dbar) {
    std::vector<std::pair<int, int>> m;
    for (int k = 0; k <= dbar; ++k)
        for (int i = k; i >= 0; --i) m.emplace_back(i, k - i);
    return m;
}

inline int mu(int dbar) { return (dbar + 1) * (dbar + 2) / 2; }

inline PiOp build_U_hat(int dbar, const Domain& dom) {
    if (dbar < 0) throw std::invalid_argument("dbar must be nonnegative");
    auto mons = monomials_st(dbar);
    const int m = static_cast<int>(mons.size());
    PolyMatrix r0(2 * m, 1), r1(2 * m, 1), r2(2 * m, 1);
    for (int k = 0; k < m; ++k) {
        Exponent e{};
        e[var::s] = static_cast<std::uint8_t>(mons[k].first);
        e[var::theta(1)] = static_cast<std::uint8_t>(mons[k].second);
        r1(k, 0) = Poly::monomial(e, 1);
        r2(m + k, 0) = Poly::monomial(e, 1);
    }
    return PiOp(r0, r1, r2, dom);
}

// Row k of a matrix-valued PiOp as a scalar PiOp.
inline PiOp row_of(const PiOp& p, int k, int col = 0) {
    return PiOp::scalar(p.R0(k, col), p.R1(k, col), p.R2(k, col), p.domain);
}

}  // namespace pies

#endif

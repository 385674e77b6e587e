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

#ifndef PIES_PI_CORE_HPP
#define PIES_PI_CORE_HPP

#include "pies/polyring.hpp"
#include "pies/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>

#include <stdexcept>
#include <string>
#include <vector>

namespace pies {

struct Domain {
    Rational a{0}, b{1};

    Domain() = default;
    Domain(Rational lo, Rational hi) : a(std::move(lo)), b(std::move(hi)) {
        if (!(a < b)) throw std::invalid_argument("domain requires a < b");
    }
    double lo() const { return a.get_d(); }
    double hi() const { return b.get_d(); }
    friend bool operator==(const Domain& x, const Domain& y) { return x.a == y.a && x.b == y.b; }
};

class PolyMatrix {
public:
    PolyMatrix() = default;
    PolyMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols)) {}
    static PolyMatrix scalar(Poly p) {
        PolyMatrix m(1, 1);
        m(0, 0) = std::move(p);
        return m;
    }
    static PolyMatrix identity(int n) {
        PolyMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = Poly(1);
        return m;
    }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    Poly& operator()(int i, int j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
    const Poly& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
    bool is_zero() const {
        for (auto& p : data_)
            if (!p.is_zero()) return false;
        return true;
    }
    template <class F>
    PolyMatrix map(F&& f) const {
        PolyMatrix r(rows_, cols_);
        for (std::size_t k = 0; k < data_.size(); ++k) r.data_[k] = f(data_[k]);
        return r;
    }
    PolyMatrix transpose() const {
        PolyMatrix r(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }
    friend PolyMatrix operator+(const PolyMatrix& x, const PolyMatrix& y) {
        check_same(x, y);
        PolyMatrix r = x;
        for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] += y.data_[k];
        return r;
    }
    friend PolyMatrix operator-(const PolyMatrix& x, const PolyMatrix& y) {
        check_same(x, y);
        PolyMatrix r = x;
        for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] -= y.data_[k];
        return r;
    }
    friend PolyMatrix operator*(const PolyMatrix& x, const PolyMatrix& y) {
        if (x.cols_ != y.rows_) throw std::invalid_argument("PolyMatrix dimension mismatch");
        PolyMatrix r(x.rows_, y.cols_);
        for (int i = 0; i < x.rows_; ++i)
            for (int j = 0; j < y.cols_; ++j)
                for (int k = 0; k < x.cols_; ++k) {
                    if (x(i, k).is_zero() || y(k, j).is_zero()) continue;
                    r(i, j) += x(i, k) * y(k, j);
                }
        return r;
    }
    friend PolyMatrix operator*(const Rational& c, PolyMatrix m) {
        for (auto& p : m.data_) p *= c;
        return m;
    }
    friend bool operator==(const PolyMatrix& x, const PolyMatrix& y) {
        return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.data_ == y.data_;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<Poly> data_;
    static void check_same(const PolyMatrix& x, const PolyMatrix& y) {
        if (x.rows_ != y.rows_ || x.cols_ != y.cols_) throw std::invalid_argument("PolyMatrix dimension mismatch");
    }
};

// P{R0, R1, R2}: R0 in s, R1 and R2 in (s, theta_1).
struct PiOp {
    PolyMatrix R0, R1, R2;
    Domain domain;

    PiOp() = default;
    PiOp(PolyMatrix r0, PolyMatrix r1, PolyMatrix r2, Domain dom = {})
        : R0(std::move(r0)), R1(std::move(r1)), R2(std::move(r2)), domain(std::move(dom)) {
        if (R0.rows() != R1.rows() || R0.rows() != R2.rows() || R0.cols() != R1.cols() || R0.cols() != R2.cols())
            throw std::invalid_argument("PiOp parameter dimensions differ");
    }
    static PiOp scalar(Poly r0, Poly r1, Poly r2, Domain dom = {}) {
        return PiOp(PolyMatrix::scalar(std::move(r0)), PolyMatrix::scalar(std::move(r1)),
                    PolyMatrix::scalar(std::move(r2)), std::move(dom));
    }
    static PiOp identity(int n = 1, Domain dom = {}) {
        return PiOp(PolyMatrix::identity(n), PolyMatrix(n, n), PolyMatrix(n, n), std::move(dom));
    }
    static PiOp multiplier(const Poly& c, Domain dom = {}) { return scalar(c, Poly(), Poly(), std::move(dom)); }
    static PiOp zero(int rows = 1, int cols = 1, Domain dom = {}) {
        return PiOp(PolyMatrix(rows, cols), PolyMatrix(rows, cols), PolyMatrix(rows, cols), std::move(dom));
    }

    int rows() const { return R0.rows(); }
    int cols() const { return R0.cols(); }
    bool is_two_pi() const { return R0.is_zero(); }
    bool is_multiplier() const { return R1.is_zero() && R2.is_zero(); }
    bool is_zero() const { return R0.is_zero() && R1.is_zero() && R2.is_zero(); }
    friend bool operator==(const PiOp& p, const PiOp& q) {
        return p.domain == q.domain && p.R0 == q.R0 && p.R1 == q.R1 && p.R2 == q.R2;
    }
    friend PiOp operator+(const PiOp& p, const PiOp& q) {
        if (!(p.domain == q.domain)) throw std::invalid_argument("domain mismatch");
        return PiOp(p.R0 + q.R0, p.R1 + q.R1, p.R2 + q.R2, p.domain);
    }
    friend PiOp operator*(const Rational& c, const PiOp& p) { return PiOp(c * p.R0, c * p.R1, c * p.R2, p.domain); }
};

// ---------------------------------------------------------------------------
// boundary conditions and the inverse map T

struct BcSpec {
    int n = 0;
    std::vector<std::vector<Rational>> B;  // n x 2n

    BcSpec() = default;
    BcSpec(int order, std::vector<std::vector<Rational>> rows) : n(order), B(std::move(rows)) {
        if (static_cast<int>(B.size()) != n) throw std::invalid_argument("B must have n rows");
        for (auto& r : B)
            if (static_cast<int>(r.size()) != 2 * n) throw std::invalid_argument("B must have 2n columns");
    }
};

struct FullRankViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Rational factorial(int k) {
    Rational f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// exact inverse by Gauss-Jordan; throws on singular input
inline std::vector<std::vector<Rational>> invert(std::vector<std::vector<Rational>> A) {
    const int n = static_cast<int>(A.size());
    std::vector<std::vector<Rational>> I(static_cast<std::size_t>(n), std::vector<Rational>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) I[i][i] = 1;
    for (int c = 0; c < n; ++c) {
        int piv = -1;
        for (int r = c; r < n; ++r)
            if (A[r][c] != 0) { piv = r; break; }
        if (piv < 0) throw FullRankViolation("B1 + B2 G(b) is singular");
        std::swap(A[c], A[piv]);
        std::swap(I[c], I[piv]);
        Rational inv = 1 / A[c][c];
        for (int j = 0; j < n; ++j) { A[c][j] *= inv; I[c][j] *= inv; }
        for (int r = 0; r < n; ++r) {
            if (r == c || A[r][c] == 0) continue;
            Rational f = A[r][c];
            for (int j = 0; j < n; ++j) { A[r][j] -= f * A[c][j]; I[r][j] -= f * I[c][j]; }
        }
    }
    return I;
}

}  // namespace detail

inline PiOp build_T(const BcSpec& bc, const Domain& dom) {
    const int n = bc.n;
    if (n < 1) throw std::invalid_argument("PDE order must be positive");
    const Poly s = Poly::variable(var::s), th = Poly::variable(var::theta(1));
    // G(b) numerically exact
    auto Gentry = [&](int i, int j, const Rational& x) -> Rational {
        if (j < i) return 0;
        Rational p = 1;
        for (int k = 0; k < j - i; ++k) p *= (x - dom.a);
        return p / detail::factorial(j - i);
    };
    std::vector<std::vector<Rational>> M(static_cast<std::size_t>(n), std::vector<Rational>(static_cast<std::size_t>(n)));
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < n; ++j) {
            Rational acc = bc.B[r][j];
            for (int i = 0; i < n; ++i) acc += bc.B[r][n + i] * Gentry(i, j, dom.b);
            M[r][j] = acc;
        }
    std::vector<std::vector<Rational>> Minv;
    try {
        Minv = detail::invert(M);
    } catch (const FullRankViolation&) {
        std::string txt = "B1 + B2 G(b) is singular: [";
        for (int r = 0; r < n; ++r) {
            txt += r ? "; " : "";
            for (int j = 0; j < n; ++j) txt += (j ? " " : "") + M[r][j].get_str();
        }
        throw FullRankViolation(txt + "]");
    }
    // H(b - theta)
    std::vector<Poly> H(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        H[i] = (Poly(dom.b) - th).pow(static_cast<unsigned>(n - i - 1)) * (Rational(1) / detail::factorial(n - i - 1));
    std::vector<Poly> B2H(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < n; ++i)
            if (bc.B[r][n + i] != 0) B2H[r] += H[i] * bc.B[r][n + i];
    std::vector<Poly> F(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        for (int r = 0; r < n; ++r)
            if (Minv[j][r] != 0) F[j] += B2H[r] * Minv[j][r];
    Poly GF;
    for (int j = 0; j < n; ++j)
        GF += (s - Poly(dom.a)).pow(static_cast<unsigned>(j)) * (Rational(1) / detail::factorial(j)) * F[j];
    Poly h0 = (s - th).pow(static_cast<unsigned>(n - 1)) * (Rational(1) / detail::factorial(n - 1));
    return PiOp::scalar(Poly(), h0 - GF, -GF, dom);
}

// d/ds of the operator output; the R0 x'(s) contribution has no PI representation and is dropped.
inline PiOp differentiate_pi(const PiOp& p) {
    const VarId s = var::s, th = var::theta(1);
    const Poly sv = Poly::variable(s);
    PolyMatrix r0 = p.R0.map([&](const Poly& x) { return x.diff(s); });
    PolyMatrix jump = (p.R1 - p.R2).map([&](const Poly& x) { return x.substitute(th, sv); });
    return PiOp(r0 + jump, p.R1.map([&](const Poly& x) { return x.diff(s); }),
                p.R2.map([&](const Poly& x) { return x.diff(s); }), p.domain);
}

inline PiOp build_Rj(const BcSpec& bc, int j, const Domain& dom) {
    if (j < 0 || j > bc.n) throw std::out_of_range("derivative index out of range");
    if (j == bc.n) return PiOp::identity(1, dom);
    PiOp r = build_T(bc, dom);
    for (int k = 0; k < j; ++k) r = differentiate_pi(r);
    return r;
}

inline PiOp adjoint(const PiOp& p) {
    std::array<VarId, kMaxVars> swap;
    for (int i = 0; i < kMaxVars; ++i) swap[i] = i;
    swap[var::s] = var::theta(1);
    swap[var::theta(1)] = var::s;
    auto flip = [&](const PolyMatrix& m) { return m.transpose().map([&](const Poly& x) { return x.rename(swap); }); };
    return PiOp(p.R0.transpose(), flip(p.R2), flip(p.R1), p.domain);
}

inline PiOp compose(const PiOp& p, const PiOp& q) {
    if (p.cols() != q.rows()) throw std::invalid_argument("compose: dimension mismatch");
    if (!(p.domain == q.domain)) throw std::invalid_argument("compose: domain mismatch");
    const VarId s = var::s, th = var::theta(1), et = var::eta(1);
    const Poly S = Poly::variable(s), TH = Poly::variable(th), A(p.domain.a), B(p.domain.b);
    // P(s, eta) and Q(eta, theta)
    auto left = [&](const PolyMatrix& m) { return m.map([&](const Poly& x) { return x.rename(th, et); }); };
    auto right = [&](const PolyMatrix& m) { return m.map([&](const Poly& x) { return x.rename(s, et); }); };
    auto at_theta = [&](const PolyMatrix& m) { return m.map([&](const Poly& x) { return x.rename(s, th); }); };
    auto integ = [&](const PolyMatrix& m, const Poly& lo, const Poly& hi) {
        return m.map([&](const Poly& x) { return x.integrate(et, lo, hi); });
    };
    PolyMatrix P1e = left(p.R1), P2e = left(p.R2), Q1e = right(q.R1), Q2e = right(q.R2);
    PolyMatrix P1Q1 = P1e * Q1e, P1Q2 = P1e * Q2e, P2Q1 = P2e * Q1e, P2Q2 = P2e * Q2e;
    PolyMatrix Q0t = at_theta(q.R0);
    PolyMatrix r0 = p.R0 * q.R0;
    PolyMatrix r1 = p.R0 * q.R1 + p.R1 * Q0t + integ(P1Q1, TH, S) + integ(P1Q2, A, TH) + integ(P2Q1, S, B);
    PolyMatrix r2 = p.R0 * q.R2 + p.R2 * Q0t + integ(P1Q2, A, S) + integ(P2Q1, TH, B) + integ(P2Q2, S, TH);
    return PiOp(r0, r1, r2, p.domain);
}

// Numeric application at the points `grid`; result is rows x grid.size().
inline Eigen::MatrixXd apply(const PiOp& p, const std::vector<Func>& v, const std::vector<double>& grid,
                             int nodes = 32) {
    if (static_cast<int>(v.size()) != p.cols()) throw std::invalid_argument("apply: input count mismatch");
    const double a = p.domain.lo(), b = p.domain.hi();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p.rows(), static_cast<Eigen::Index>(grid.size()));
    std::array<double, kMaxVars> x{};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double s = grid[k];
        x[var::s] = s;
        Rule lo = gauss_on(a, s, nodes), hi = gauss_on(s, b, nodes);
        for (int i = 0; i < p.rows(); ++i) {
            double acc = 0.0;
            for (int j = 0; j < p.cols(); ++j) {
                if (!p.R0(i, j).is_zero()) acc += p.R0(i, j).eval(x.data()) * v[j](s);
                if (!p.R1(i, j).is_zero() && s > a)
                    for (std::size_t q = 0; q < lo.x.size(); ++q) {
                        x[var::theta(1)] = lo.x[q];
                        acc += lo.w[q] * p.R1(i, j).eval(x.data()) * v[j](lo.x[q]);
                    }
                if (!p.R2(i, j).is_zero() && s < b)
                    for (std::size_t q = 0; q < hi.x.size(); ++q) {
                        x[var::theta(1)] = hi.x[q];
                        acc += hi.w[q] * p.R2(i, j).eval(x.data()) * v[j](hi.x[q]);
                    }
            }
            out(i, static_cast<Eigen::Index>(k)) = acc;
        }
    }
    return out;
}

inline std::vector<double> apply_scalar(const PiOp& p, const Func& v, const std::vector<double>& grid,
                                        int nodes = 32) {
    Eigen::MatrixXd m = apply(p, std::vector<Func>{v}, grid, nodes);
    return std::vector<double>(m.data(), m.data() + m.size());
}

// Sampled function on a strictly increasing grid, evaluated by cubic interpolation.
struct SampledFunction {
    std::vector<double> grid, values;

    SampledFunction() = default;
    SampledFunction(std::vector<double> g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (grid.size() != values.size() || grid.size() < 2) throw std::invalid_argument("bad sampled function");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("grid must be strictly increasing");
    }
    static SampledFunction sample(const Func& f, double a, double b, int n) {
        std::vector<double> g(static_cast<std::size_t>(n)), v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            g[i] = a + (b - a) * i / (n - 1);
            v[i] = f(g[i]);
        }
        return SampledFunction(std::move(g), std::move(v));
    }
    double operator()(double x) const {
        const std::size_t n = grid.size();
        auto it = std::upper_bound(grid.begin(), grid.end(), x);
        std::size_t k = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
        k = std::min(k, n - 2);
        // 4-point Lagrange stencil around [k, k+1]
        std::size_t lo = k == 0 ? 0 : k - 1;
        if (lo + 3 >= n) lo = n >= 4 ? n - 4 : 0;
        std::size_t hi = std::min(n, lo + 4);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            double l = 1.0;
            for (std::size_t j = lo; j < hi; ++j)
                if (j != i) l *= (x - grid[j]) / (grid[i] - grid[j]);
            acc += l * values[i];
        }
        return acc;
    }
    Func as_func() const {
        return [self = *this](double x) { return self(x); };
    }
};

}  // namespace pies

#endif

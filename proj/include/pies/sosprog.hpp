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

// Distributed SOS polynomials, the Lie derivative of quadratic functionals and the
// stability feasibility program with its bisection drivers.
#ifndef PIES_SOSPROG_HPP
#define PIES_SOSPROG_HPP

#include "pies/pde2pie.hpp"
#include "pies/sdp.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

namespace pies {

using RatMatrix = std::vector<std::vector<Rational>>;

namespace detail {

inline const TensorTerm& only_term(const TensorPiOp& h) {
    if (h.terms.size() != 1) throw std::invalid_argument("expected a single tensor product");
    for (auto& f : h.terms.front().factors)
        if (f.cols() != 1 || !f.is_two_pi()) throw std::invalid_argument("factors must be 2-PI column operators");
    return h.terms.front();
}

// rows[k][r] is row r of factor k
inline std::vector<std::vector<PiOp>> factor_rows(const TensorTerm& t) {
    std::vector<std::vector<PiOp>> out;
    for (auto& f : t.factors) {
        out.emplace_back();
        for (int r = 0; r < f.rows(); ++r) out.back().push_back(row_of(f, r));
    }
    return out;
}

// Kronecker index -> per-factor row, first factor most significant
inline void append_rows(const std::vector<std::vector<PiOp>>& rows, int idx, std::vector<PiOp>& dst) {
    const std::size_t start = dst.size();
    dst.resize(start + rows.size());
    for (std::size_t k = rows.size(); k-- > 0;) {
        const int n = static_cast<int>(rows[k].size());
        dst[start + k] = rows[k][static_cast<std::size_t>(idx % n)];
        idx /= n;
    }
}

}  // namespace detail

// Degree-(i+j) kernel of sum_{p,q} Q_pq vec((U_L)_p ⊗ (U_R)_q).
inline DistPoly linearize_quadratic(const TensorPiOp& left, const RatMatrix& gram, const TensorPiOp& right) {
    const auto& L = detail::only_term(left);
    const auto& R = detail::only_term(right);
    if (!(left.domain == right.domain)) throw std::invalid_argument("linearize_quadratic: domain mismatch");
    const int nl = left.output_rows(), nr = right.output_rows();
    if (static_cast<int>(gram.size()) != nl) throw std::invalid_argument("linearize_quadratic: gram row count mismatch");
    for (auto& row : gram)
        if (static_cast<int>(row.size()) != nr) throw std::invalid_argument("linearize_quadratic: gram column count mismatch");
    const int deg = left.degree + right.degree;
    DistPoly out(left.domain, deg);
    auto lr = detail::factor_rows(L), rr = detail::factor_rows(R);
    std::vector<PiOp> f;
    for (int p = 0; p < nl; ++p)
        for (int q = 0; q < nr; ++q) {
            const Rational& g = gram[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
            if (g == 0) continue;
            f.clear();
            detail::append_rows(lr, p, f);
            detail::append_rows(rr, q, f);
            Poly k = detail::vec_term(f, left.domain);
            k *= g;
            out.kernel(deg) += k;
        }
    return out;
}

inline TensorPiOp u_hat_power(int i, int dbar, const Domain& dom) {
    return TensorPiOp::single(std::vector<PiOp>(static_cast<std::size_t>(i), build_U_hat(dbar, dom)));
}

// <Z_d(x), Q Z_d(x)> with Z_d(x) = [Ux; (Ux)^{⊗2}; ...; (Ux)^{⊗d}] and U = build_U_hat(dbar).
struct SosPoly {
    int d = 1;
    int dbar = 0;
    Domain domain;
    RatMatrix gram;

    int block_dim(int i) const {
        int n = 1;
        for (int k = 0; k < i; ++k) n *= 2 * mu(dbar);
        return n;
    }
    int size() const {
        int n = 0;
        for (int i = 1; i <= d; ++i) n += block_dim(i);
        return n;
    }
};

inline DistPoly linearize_sos(const SosPoly& q) {
    if (q.d < 1) throw std::invalid_argument("SOS degree must be positive");
    const int n = q.size();
    if (static_cast<int>(q.gram.size()) != n) throw std::invalid_argument("gram size does not match the monomial basis");
    DistPoly out(q.domain, 2 * q.d);
    int oi = 0;
    for (int i = 1; i <= q.d; ++i) {
        int oj = 0;
        for (int j = 1; j <= q.d; ++j) {
            RatMatrix sub(static_cast<std::size_t>(q.block_dim(i)));
            for (int a = 0; a < q.block_dim(i); ++a) {
                const auto& row = q.gram.at(static_cast<std::size_t>(oi + a));
                if (static_cast<int>(row.size()) != n) throw std::invalid_argument("gram must be square");
                sub[a].assign(row.begin() + oj, row.begin() + oj + q.block_dim(j));
            }
            out = out + linearize_quadratic(u_hat_power(i, q.dbar, q.domain), sub, u_hat_power(j, q.dbar, q.domain));
            oj += q.block_dim(j);
        }
        oi += q.block_dim(i);
    }
    return out;
}

// 2 sum_i vec(C_i ⊗ X) for X = P∘T.
inline DistPoly lie_from_PT(const PieModel& pie, const PiOp& PT) {
    DistPoly out(pie.domain, pie.degree() + 1);
    for (int i = 1; i <= pie.degree(); ++i)
        for (auto& t : pie.Ck(i).terms) {
            auto f = t.factors;
            f.push_back(PT);
            Poly k = vec_tensor_pi_folded(TensorPiOp::single(std::move(f))).kernel;
            k *= Rational(2);
            out.kernel(i + 1) += k;
        }
    return out;
}

// Time derivative of V(v) = <Tv, P Tv> along the PIE.
inline DistPoly lie_derivative(const PieModel& pie, const PiOp& P) {
    if (P.rows() != 1 || P.cols() != 1) throw std::invalid_argument("lie_derivative: P must be scalar");
    if (!(adjoint(P) == P)) throw std::invalid_argument("lie_derivative: P is not self-adjoint");
    return lie_from_PT(pie, compose(P, pie.T));
}

// ---------------------------------------------------------------------------
// monomial Gram bases built from rows of U = build_U_hat

inline std::vector<MonoFactor> u_hat_monomials(int dbar) {
    auto mons = monomials_st(dbar);
    std::vector<MonoFactor> out;
    for (auto& [p, q] : mons) out.push_back({p, q, true});
    for (auto& [p, q] : mons) out.push_back({p, q, false});
    return out;
}

// Elements are products of rows of U: single rows of U(dbar1), then nondecreasing
// tuples of rows of U(dbar_hi) of length 2..degree (the symmetric part of (Ux)^{⊗k}).
struct GramBasis {
    std::vector<std::vector<MonoFactor>> elems;

    int size() const { return static_cast<int>(elems.size()); }

    static GramBasis make(int degree, int dbar1, int dbar_hi) {
        if (degree < 1) throw std::invalid_argument("Gram basis degree must be positive");
        GramBasis b;
        for (auto& m : u_hat_monomials(dbar1)) b.elems.push_back({m});
        const auto hi = u_hat_monomials(dbar_hi);
        const int n = static_cast<int>(hi.size());
        for (int k = 2; k <= degree; ++k) {
            std::vector<int> idx(static_cast<std::size_t>(k), 0);
            while (true) {
                std::vector<MonoFactor> e;
                for (int i : idx) e.push_back(hi[static_cast<std::size_t>(i)]);
                b.elems.push_back(std::move(e));
                int pos = k - 1;
                while (pos >= 0 && idx[pos] == n - 1) --pos;
                if (pos < 0) break;
                ++idx[pos];
                for (int t = pos + 1; t < k; ++t) idx[t] = idx[pos];
            }
        }
        return b;
    }
};

struct GramKernel {
    int i = 0, j = 0, degree = 0;
    Poly kernel;
};

// vec(z_i ⊗ z_j) for i <= j
inline std::vector<GramKernel> gram_kernels(const GramBasis& b, const Domain& dom) {
    std::vector<GramKernel> out;
    for (int i = 0; i < b.size(); ++i)
        for (int j = i; j < b.size(); ++j) {
            auto f = b.elems[static_cast<std::size_t>(i)];
            f.insert(f.end(), b.elems[static_cast<std::size_t>(j)].begin(), b.elems[static_cast<std::size_t>(j)].end());
            out.push_back({i, j, static_cast<int>(f.size()), vec_monomials(f, dom)});
        }
    return out;
}

// ---------------------------------------------------------------------------
// stability program

struct SosDegrees {
    int d = 2;          // slack SOS degree
    int dp = 1;         // multiplier degree
    int dbar = 4;       // V and the single-factor part of the slack bases
    int dbar_quad = 2;  // factors of the product part of the slack bases
    int dbar_mult = 4;  // multipliers
};

struct Theorem1Options {
    double eps2 = 1e-4;
    SosDegrees degrees{};
    bool energy = false;  // V fixed to ||Tv||^2; only the decay condition is imposed
};

struct StabilityCertificate {
    std::string mode;
    SosDegrees degrees;
    double r = 0, lambda = 0, eps = 0, C = 0, M = 0;
    FeasStatus status = FeasStatus::NumericalFailure;
    double residual = 0, min_eig = 0;
    double residual_tol = 0, eig_tol = 0;
    int rows = 0, iterations = 0;
    std::string hash;
    double assemble_seconds = 0, solve_seconds = 0;
    std::map<std::string, Eigen::MatrixXd> gram;

    bool feasible() const { return status == FeasStatus::Feasible; }
};

inline std::string problem_hash(const SdpProblem& p) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t x) {
        for (int k = 0; k < 8; ++k) {
            h ^= (x >> (8 * k)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    auto dbl = [&](double v) {
        std::uint64_t u;
        std::memcpy(&u, &v, sizeof u);
        mix(u);
    };
    mix(p.blocks.size());
    for (int b : p.blocks) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(b)));
    mix(p.A.size());
    for (int k = 0; k < p.rows(); ++k) {
        mix(p.A[k].size());
        for (auto& e : p.A[k]) {
            mix(static_cast<std::uint64_t>(e.block));
            mix(static_cast<std::uint64_t>(e.i));
            mix(static_cast<std::uint64_t>(e.j));
            dbl(e.v);
        }
        dbl(p.b[k]);
    }
    for (auto& e : p.C) dbl(e.v);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Coefficient matching for
//   V - eps2 ||Tv||^2 = W1,  C2 ||Tv||^2 - V - p1 g_r = W2,  -LV - 2 lambda V - p2 g_r = W3
// with V = <Tv, (U* Q U + eps2 I) Tv>. The rows are assembled once in exact arithmetic;
// r^2 and lambda enter linearly, so each (r, lambda) instance is a cheap rescaling.
class Theorem1Program {
public:
    Theorem1Program(const PieModel& pie, Theorem1Options opt) : pie_(pie), opt_(opt) {
        const auto& dg = opt_.degrees;
        if (dg.d != dg.dp + 1) throw std::invalid_argument("degree relation d = d' + 1 violated");
        if (dg.dp < 1 || dg.dbar < 0 || dg.dbar_quad < 0 || dg.dbar_mult < 0) throw std::invalid_argument("degrees must be nonnegative");
        if (!(opt_.eps2 > 0)) throw std::invalid_argument("eps2 must be positive");
        if (pie.degree() + 1 > 2 * dg.d) throw std::invalid_argument("PIE degree exceeds the slack SOS degree");
        if (2 * dg.d > kMaxTheta || 2 * dg.dp + 2 > kMaxTheta) throw std::invalid_argument("degree exceeds the variable universe");
        auto t0 = std::chrono::steady_clock::now();
        assemble();
        assemble_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    const Theorem1Options& options() const { return opt_; }
    const PieModel& pie() const { return pie_; }
    int row_count() const { return static_cast<int>(rows_.size()); }
    int variable_count() const { return static_cast<int>(vars_.size()); }
    double assemble_seconds() const { return assemble_seconds_; }
    const std::vector<int>& blocks() const { return blocks_; }
    const std::vector<std::string>& block_names() const { return names_; }

    SdpProblem instance(double r, double lambda) const {
        check_params(r, lambda);
        const double r2 = r * r;
        SdpProblem p;
        p.blocks = blocks_;
        for (auto& row : rows_) {
            std::vector<SdpEntry> ent;
            for (auto& c : row.coefs) {
                const double v = c.c[0] + r2 * c.c[1] + lambda * c.c[2];
                if (v == 0.0) continue;
                const Var& x = vars_[static_cast<std::size_t>(c.var)];
                ent.push_back({x.block, x.i, x.j, v});
            }
            const double rhs = row.rhs[0] + r2 * row.rhs[1] + lambda * row.rhs[2];
            if (ent.empty() && rhs == 0.0) continue;
            p.A.push_back(std::move(ent));
            p.b.push_back(rhs);
        }
        return p;
    }

    StabilityCertificate solve(double r, double lambda, Backend backend = Backend::Internal, const FeasOptions& fo = {}) const {
        StabilityCertificate c;
        c.mode = opt_.energy ? "energy" : "full";
        c.degrees = opt_.degrees;
        c.r = r;
        c.lambda = lambda;
        c.residual_tol = fo.residual_tol;
        c.eig_tol = fo.eig_tol;
        c.assemble_seconds = assemble_seconds_;
        SdpProblem p = instance(r, lambda);
        c.rows = p.rows();
        c.hash = problem_hash(p);
        auto t0 = std::chrono::steady_clock::now();
        FeasResult fr = solve_feasibility(p, backend, fo);
        c.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        c.status = fr.status;
        c.residual = fr.residual;
        c.min_eig = fr.min_eig;
        c.iterations = fr.iterations;
        for (std::size_t b = 0; b < blocks_.size() && b < fr.X.size(); ++b) c.gram[names_[b]] = fr.X[b];
        if (opt_.energy) {
            c.eps = c.C = c.M = 1.0;
        } else {
            c.eps = std::sqrt(opt_.eps2);
            auto it = c.gram.find("C2");
            c.C = it != c.gram.end() ? std::sqrt(std::max(0.0, it->second(0, 0))) : 0.0;
            c.M = c.C / c.eps;
        }
        return c;
    }

    // V and LV reconstructed from a certificate's numeric Gram matrix.
    DistPoly lyapunov(const StabilityCertificate& c) const { return functional(c, false); }
    DistPoly lie(const StabilityCertificate& c) const { return functional(c, true); }

private:
    struct Var {
        int block, i, j;
    };
    struct Coef {
        int var;
        double c[3];  // constant, r^2, lambda
    };
    struct Row {
        std::vector<Coef> coefs;
        double rhs[3];
    };
    struct Trip {
        int row, var, tag;
        Rational c;
    };
    enum Tag { kBase = 0, kR2 = 1, kLam = 2 };

    PieModel pie_;
    Theorem1Options opt_;
    double assemble_seconds_ = 0;
    std::vector<int> blocks_;
    std::vector<std::string> names_;
    std::vector<int> var_base_;
    std::vector<Var> vars_;
    std::vector<Row> rows_;
    // kept for reconstruction
    std::vector<std::pair<int, int>> qv_pairs_;
    std::vector<Poly> qv_kernels_;
    std::vector<DistPoly> qv_lie_;
    Poly vtt_;
    DistPoly lie_identity_;

    std::map<std::tuple<int, int, Exponent>, int> row_index_;
    std::vector<Trip> trips_;

    static void check_params(double r, double lambda) {
        if (!(r > 0) || !std::isfinite(r)) throw std::invalid_argument("ball radius must be positive");
        if (!(lambda >= 0) || !std::isfinite(lambda)) throw std::invalid_argument("decay rate must be nonnegative");
    }

    int add_block(const std::string& name, int n, bool lp = false) {
        blocks_.push_back(lp ? -n : n);
        names_.push_back(name);
        var_base_.push_back(static_cast<int>(vars_.size()));
        const int b = static_cast<int>(blocks_.size()) - 1;
        if (lp)
            for (int i = 0; i < n; ++i) vars_.push_back({b, i, i});
        else
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) vars_.push_back({b, i, j});
        return b;
    }
    int var(int b, int i, int j) const {
        const int n = std::abs(blocks_[static_cast<std::size_t>(b)]);
        if (blocks_[static_cast<std::size_t>(b)] < 0) return var_base_[static_cast<std::size_t>(b)] + i;
        return var_base_[static_cast<std::size_t>(b)] + i * n - i * (i - 1) / 2 + (j - i);
    }
    int row_id(int cid, int deg, const Exponent& e) {
        auto [it, fresh] = row_index_.try_emplace({cid, deg, e}, static_cast<int>(row_index_.size()));
        return it->second;
    }
    // var = -1 puts the kernel on the right-hand side
    void add(int cid, int deg, const Poly& k, int v, int tag, const Rational& scale) {
        for (auto& [e, c] : k.terms()) trips_.push_back({row_id(cid, deg, e), v, tag, c * scale});
    }
    void add(int cid, const DistPoly& p, int v, int tag, const Rational& scale) {
        for (auto& f : p.components) add(cid, f.degree, f.kernel, v, tag, scale);
    }

    void assemble() {
        const auto& dg = opt_.degrees;
        const Domain& dom = pie_.domain;
        const Rational eps2 = rational_from_double(opt_.eps2);
        const bool full = !opt_.energy;

        vtt_ = vec_TT(pie_).kernel;
        lie_identity_ = lie_from_PT(pie_, pie_.T);

        GramBasis wb = GramBasis::make(dg.d, dg.dbar, dg.dbar_quad);
        GramBasis pb = GramBasis::make(dg.dp, dg.dbar_mult, dg.dbar_quad);
        const int n1 = 2 * mu(dg.dbar);
        auto wk = gram_kernels(wb, dom);
        auto pk = gram_kernels(pb, dom);
        std::vector<Poly> pkk;
        for (auto& g : pk) pkk.push_back(fpi_tensor(FPiOp{g.degree, g.kernel, dom}, FPiOp{2, vtt_, dom}).kernel);

        if (full) {
            const PiOp U = build_U_hat(dg.dbar, dom);
            std::vector<PiOp> rows, adj;
            for (int k = 0; k < n1; ++k) {
                rows.push_back(row_of(U, k));
                adj.push_back(adjoint(rows.back()));
            }
            for (int p = 0; p < n1; ++p)
                for (int q = p; q < n1; ++q) {
                    PiOp S = compose(adj[p], rows[q]);
                    if (p != q) S = Rational(1, 2) * (S + compose(adj[q], rows[p]));
                    PiOp ST = compose(S, pie_.T);
                    qv_pairs_.emplace_back(p, q);
                    qv_kernels_.push_back(vec_tensor_pi(TensorPiOp::single({pie_.T, ST})).kernel);
                    qv_lie_.push_back(lie_from_PT(pie_, ST));
                }
        }

        const int bQ = full ? add_block("QV", n1) : -1;
        const int bW1 = full ? add_block("W1", n1) : -1;
        const int bW2 = full ? add_block("W2", wb.size()) : -1;
        const int bP1 = full ? add_block("P1", pb.size()) : -1;
        const int bW3 = add_block("W3", wb.size());
        const int bP2 = add_block("P2", pb.size());
        const int bC = full ? add_block("C2", 1, true) : -1;

        if (full) {
            for (std::size_t k = 0; k < qv_pairs_.size(); ++k) {
                const int v = var(bQ, qv_pairs_[k].first, qv_pairs_[k].second);
                add(1, 2, qv_kernels_[k], v, kBase, 1);
                add(2, 2, qv_kernels_[k], v, kBase, -1);
                add(3, qv_lie_[k], v, kBase, -1);
                add(3, 2, qv_kernels_[k], v, kLam, -2);
            }
            for (auto& g : wk)
                if (g.j < n1) add(1, g.degree, g.kernel, var(bW1, g.i, g.j), kBase, -1);
            add(2, 2, vtt_, var(bC, 0, 0), kBase, 1);
            for (std::size_t k = 0; k < pk.size(); ++k) {
                const int v = var(bP1, pk[k].i, pk[k].j);
                add(2, pk[k].degree, pk[k].kernel, v, kR2, -1);
                add(2, pk[k].degree + 2, pkk[k], v, kBase, 1);
            }
            for (auto& g : wk) add(2, g.degree, g.kernel, var(bW2, g.i, g.j), kBase, -1);
            add(2, 2, vtt_, -1, kBase, eps2);
        }
        for (std::size_t k = 0; k < pk.size(); ++k) {
            const int v = var(bP2, pk[k].i, pk[k].j);
            add(3, pk[k].degree, pk[k].kernel, v, kR2, -1);
            add(3, pk[k].degree + 2, pkk[k], v, kBase, 1);
        }
        for (auto& g : wk) add(3, g.degree, g.kernel, var(bW3, g.i, g.j), kBase, -1);
        const Rational ve = full ? eps2 : Rational(1);
        add(3, lie_identity_, -1, kBase, ve);
        add(3, 2, vtt_, -1, kLam, 2 * ve);

        finalize();
    }

    void finalize() {
        std::sort(trips_.begin(), trips_.end(), [](const Trip& a, const Trip& b) {
            return std::tie(a.row, a.var, a.tag) < std::tie(b.row, b.var, b.tag);
        });
        std::vector<int> order(row_index_.size());
        {
            int k = 0;
            for (auto& kv : row_index_) order[static_cast<std::size_t>(k++)] = kv.second;
        }
        // exact per-row merge
        struct ExactRow {
            std::vector<std::tuple<int, int, Rational>> coefs;
            Rational rhs[3];
        };
        std::vector<ExactRow> ex(row_index_.size());
        for (std::size_t a = 0; a < trips_.size();) {
            std::size_t b = a;
            Rational sum = 0;
            while (b < trips_.size() && trips_[b].row == trips_[a].row && trips_[b].var == trips_[a].var &&
                   trips_[b].tag == trips_[a].tag)
                sum += trips_[b++].c;
            sum.canonicalize();
            auto& row = ex[static_cast<std::size_t>(trips_[a].row)];
            if (sum != 0) {
                if (trips_[a].var < 0) row.rhs[trips_[a].tag] = sum;
                else row.coefs.emplace_back(trips_[a].var, trips_[a].tag, sum);
            }
            a = b;
        }
        trips_.clear();
        trips_.shrink_to_fit();
        std::unordered_set<std::string> seen;
        for (int id : order) {  // canonical (constraint, degree, exponent) order
            auto& er = ex[static_cast<std::size_t>(id)];
            if (er.coefs.empty() && er.rhs[0] == 0 && er.rhs[1] == 0 && er.rhs[2] == 0) continue;
            std::string key;
            for (auto& [v, t, c] : er.coefs) key += std::to_string(v) + ":" + std::to_string(t) + ":" + c.get_str() + ";";
            for (auto& c : er.rhs) key += c.get_str() + "|";
            if (!seen.insert(std::move(key)).second) continue;
            Row row{};
            for (auto& [v, t, c] : er.coefs) {
                if (row.coefs.empty() || row.coefs.back().var != v) row.coefs.push_back({v, {0, 0, 0}});
                row.coefs.back().c[t] = c.get_d();
            }
            for (int t = 0; t < 3; ++t) row.rhs[t] = er.rhs[t].get_d();
            rows_.push_back(std::move(row));
        }
        row_index_.clear();
    }

    DistPoly functional(const StabilityCertificate& c, bool lie) const {
        const Domain& dom = pie_.domain;
        if (opt_.energy) {
            if (lie) return lie_identity_;
            DistPoly v(dom, 2);
            v.kernel(2) = vtt_;
            return v;
        }
        const Rational eps2 = rational_from_double(opt_.eps2);
        DistPoly out = lie ? eps2 * lie_identity_ : DistPoly(dom, 2);
        if (!lie) out.kernel(2) = vtt_ * eps2;
        auto it = c.gram.find("QV");
        if (it == c.gram.end()) throw std::invalid_argument("certificate has no QV block");
        for (std::size_t k = 0; k < qv_pairs_.size(); ++k) {
            const Rational q = rational_from_double(it->second(qv_pairs_[k].first, qv_pairs_[k].second));
            if (q == 0) continue;
            if (lie) out = out + q * qv_lie_[k];
            else out.kernel(2) += qv_kernels_[k] * q;
        }
        return out;
    }
};

inline SdpProblem assemble_theorem1(const PieModel& pie, double r, double lambda, double eps2, const SosDegrees& degrees,
                                    bool energy = false) {
    return Theorem1Program(pie, {eps2, degrees, energy}).instance(r, lambda);
}

// ---------------------------------------------------------------------------
// randomized soundness check of a certificate inside the ball

struct SpotCheck {
    std::uint64_t seed = 0;
    int samples = 0;
    double max_violation = 0;  // worst excess over the certified inequalities
};

inline SpotCheck spot_check(const Theorem1Program& prog, const PieModel& pie, const StabilityCertificate& c,
                            std::uint64_t seed, int samples = 100) {
    SpotCheck out{seed, samples, 0.0};
    if (!c.feasible()) return out;
    const DistPoly V = prog.lyapunov(c), LV = prog.lie(c);
    const double lo = pie.domain.lo(), hi = pie.domain.hi();
    auto g = gauss_on(lo, hi, 32);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), rad(0.0, 1.0);
    for (int k = 0; k < samples; ++k) {
        const double a = u(rng), b = u(rng), cc = u(rng), w = 2.0 + 1.5 * u(rng);
        Func v0 = [=](double x) { return a + b * (x - lo) + cc * std::sin(w * (x - lo)); };
        auto tv = apply_scalar(pie.T, v0, g.x);
        double n2 = 0;
        for (std::size_t i = 0; i < tv.size(); ++i) n2 += g.w[i] * tv[i] * tv[i];
        if (n2 <= 0) continue;
        const double scale = c.r * rad(rng) / std::sqrt(n2);
        Func v = [&](double x) { return scale * v0(x); };
        const double tt = n2 * scale * scale;
        const double vv = V.eval(v), lv = LV.eval(v);
        double viol = lv + 2 * c.lambda * vv;
        if (c.mode == "full") viol = std::max({viol, c.eps * c.eps * tt - vv, vv - c.C * c.C * tt});
        out.max_violation = std::max(out.max_violation, viol);
    }
    return out;
}

// ---------------------------------------------------------------------------
// bisection

enum class BisectMode { Rate, Radius };

struct BisectOptions {
    double lo = 0.0, hi = 10.0;
    double tol = 1e-2;
    int budget = 30;
    Backend backend = Backend::Internal;
    FeasOptions feas{};
};

struct BisectResult {
    bool found = false;            // false: the lower bracket end is not feasible
    double value = 0;              // largest feasible value seen
    StabilityCertificate cert;     // certificate of the last feasible solve, or of the failed lower end
    std::vector<std::pair<double, StabilityCertificate>> trace;
};

// Feasibility is assumed monotone: decreasing in lambda at fixed r (Rate) and in r at fixed lambda (Radius).
inline BisectResult bisect(const Theorem1Program& prog, BisectMode mode, double fixed, const BisectOptions& o = {}) {
    if (!(o.hi > o.lo)) throw std::invalid_argument("bisection bracket is empty");
    if (!(o.tol > 0)) throw std::invalid_argument("bisection tolerance must be positive");
    if (mode == BisectMode::Radius && !(o.lo > 0)) throw std::invalid_argument("radius bracket must start above zero");
    BisectResult res;
    int solves = 0;
    auto run = [&](double x) {
        ++solves;
        auto c = mode == BisectMode::Rate ? prog.solve(fixed, x, o.backend, o.feas) : prog.solve(x, fixed, o.backend, o.feas);
        res.trace.emplace_back(x, c);
        return c;
    };
    auto lo_cert = run(o.lo);
    res.cert = lo_cert;
    if (!lo_cert.feasible()) return res;
    res.found = true;
    res.value = o.lo;
    auto hi_cert = run(o.hi);
    if (hi_cert.feasible()) {
        res.value = o.hi;
        res.cert = hi_cert;
        return res;
    }
    double lo = o.lo, hi = o.hi;
    while (hi - lo > o.tol && solves < o.budget) {
        const double mid = 0.5 * (lo + hi);
        auto c = run(mid);
        if (c.feasible()) {
            lo = mid;
            res.value = mid;
            res.cert = c;
        } else {
            hi = mid;
        }
    }
    return res;
}

}  // namespace pies

#endif

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

// Semidefinite programs in equality form, a primal-dual interior point solver,
// a phase-1 feasibility test and SDPA sparse file I/O.
#ifndef PIES_SDP_HPP
#define PIES_SDP_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pies {

// min <C, X>  s.t.  <A_k, X> = b_k,  X = diag(X_1, ..., X_p) with PSD blocks (dim > 0)
// and nonnegative diagonal blocks (dim < 0). Matrices are symmetric and stored by their
// upper triangle (i <= j), so <A, X> = sum_i A_ii X_ii + 2 sum_{i<j} A_ij X_ij.
struct SdpEntry {
    int block = 0;
    int i = 0, j = 0;
    double v = 0.0;
    friend bool operator==(const SdpEntry&, const SdpEntry&) = default;
};

struct SdpProblem {
    std::vector<int> blocks;
    std::vector<std::vector<SdpEntry>> A;
    std::vector<double> b;
    std::vector<SdpEntry> C;

    int add_psd_block(int n) {
        if (n <= 0) throw std::invalid_argument("PSD block dimension must be positive");
        blocks.push_back(n);
        return static_cast<int>(blocks.size()) - 1;
    }
    int add_lp_block(int n) {
        if (n <= 0) throw std::invalid_argument("LP block length must be positive");
        blocks.push_back(-n);
        return static_cast<int>(blocks.size()) - 1;
    }
    int add_row(std::vector<SdpEntry> entries, double rhs) {
        for (auto& e : entries) check_entry(e);
        A.push_back(std::move(entries));
        b.push_back(rhs);
        return static_cast<int>(A.size()) - 1;
    }
    int rows() const { return static_cast<int>(A.size()); }
    int dim(int blk) const { return std::abs(blocks.at(static_cast<std::size_t>(blk))); }
    bool is_lp(int blk) const { return blocks.at(static_cast<std::size_t>(blk)) < 0; }

    void check_entry(SdpEntry& e) const {
        if (e.block < 0 || e.block >= static_cast<int>(blocks.size())) throw std::invalid_argument("entry references an undeclared block");
        if (e.i > e.j) std::swap(e.i, e.j);
        const int n = dim(e.block);
        if (e.i < 0 || e.j >= n) throw std::invalid_argument("entry index outside its block");
        if (is_lp(e.block) && e.i != e.j) throw std::invalid_argument("LP block entries must be diagonal");
    }
    friend bool operator==(const SdpProblem&, const SdpProblem&) = default;
};

using BlockMatrices = std::vector<Eigen::MatrixXd>;  // LP blocks stored as n x 1 columns

inline BlockMatrices zero_blocks(const SdpProblem& p) {
    BlockMatrices out;
    for (int k = 0; k < static_cast<int>(p.blocks.size()); ++k)
        out.push_back(p.is_lp(k) ? Eigen::MatrixXd::Zero(p.dim(k), 1) : Eigen::MatrixXd::Zero(p.dim(k), p.dim(k)));
    return out;
}

inline double entry_inner(const SdpProblem& p, const std::vector<SdpEntry>& row, const BlockMatrices& X) {
    double acc = 0.0;
    for (auto& e : row) {
        if (p.is_lp(e.block)) acc += e.v * X[e.block](e.i, 0);
        else acc += (e.i == e.j ? 1.0 : 2.0) * e.v * X[e.block](e.i, e.j);
    }
    return acc;
}

// A(X) - b
inline Eigen::VectorXd primal_residual(const SdpProblem& p, const BlockMatrices& X) {
    Eigen::VectorXd r(p.rows());
    for (int k = 0; k < p.rows(); ++k) r[k] = entry_inner(p, p.A[k], X) - p.b[k];
    return r;
}

inline double min_eigenvalue(const SdpProblem& p, const BlockMatrices& X) {
    double m = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(p.blocks.size()); ++k) {
        if (p.is_lp(k)) {
            if (X[k].size()) m = std::min(m, X[k].minCoeff());
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X[k], Eigen::EigenvaluesOnly);
            m = std::min(m, es.eigenvalues().minCoeff());
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// interior point method (HKM direction, Mehrotra predictor-corrector)

struct IpmOptions {
    int max_iter = 120;
    double tol_feas = 1e-10;
    double tol_gap = 1e-9;
    double step = 0.95;
    int stall_window = 10;  // stop when mu and the infeasibilities stop improving over this many steps
    bool verbose = false;
};

enum class IpmStatus { Optimal, MaxIter, Stalled, NumericalFailure };

struct IpmResult {
    IpmStatus status = IpmStatus::NumericalFailure;
    BlockMatrices X, Z;
    Eigen::VectorXd y;
    double primal_obj = 0, dual_obj = 0;
    double primal_infeas = 0, dual_infeas = 0;
    int iterations = 0;
};

namespace detail {

struct BlockPattern {
    // rows touching this block and their entries
    std::vector<int> row;
    std::vector<std::vector<SdpEntry>> ent;
};

class Ipm {
public:
    Ipm(const SdpProblem& p, IpmOptions o) : p_(p), o_(o), nb_(static_cast<int>(p.blocks.size())), m_(p.rows()) {
        pat_.resize(static_cast<std::size_t>(nb_));
        for (int k = 0; k < m_; ++k) {
            std::vector<std::vector<SdpEntry>> per(static_cast<std::size_t>(nb_));
            for (auto& e : p.A[k])
                if (e.v != 0.0) per[e.block].push_back(e);
            for (int blk = 0; blk < nb_; ++blk)
                if (!per[blk].empty()) {
                    pat_[blk].row.push_back(k);
                    pat_[blk].ent.push_back(std::move(per[blk]));
                }
        }
        b_ = Eigen::Map<const Eigen::VectorXd>(p.b.data(), m_);
        C_ = zero_blocks(p);
        for (auto& e : p.C) add_sym(C_, e, e.v);
    }

    IpmResult run() {
        IpmResult res;
        init();
        double total_dim = 0;
        for (int k = 0; k < nb_; ++k) total_dim += p_.dim(k);
        const double bnorm = 1.0 + b_.norm();
        const double cnorm = 1.0 + frob(C_);
        std::vector<double> merit;
        // best near-optimal iterate, restored if the factorization later breaks down
        struct Snapshot {
            double merit = std::numeric_limits<double>::infinity();
            BlockMatrices X, Z;
            Eigen::VectorXd y;
            double pobj = 0, dobj = 0, pinf = 0, dinf = 0;
        } best;
        for (int it = 0; it < o_.max_iter; ++it) {
            res.iterations = it;
            Eigen::VectorXd rp = b_ - Aop(X_);
            BlockMatrices Rd = sub(sub(C_, AT(y_)), Z_);
            const double mu = inner(X_, Z_) / total_dim;
            const double pobj = inner(C_, X_), dobj = b_.dot(y_);
            const double pinf = rp.norm() / bnorm, dinf = frob(Rd) / cnorm;
            const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
            if (o_.verbose)
                std::fprintf(stderr, "ipm %3d  pobj %+.8e dobj %+.8e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", it, pobj, dobj,
                             pinf, dinf, gap, mu);
            res.primal_obj = pobj;
            res.dual_obj = dobj;
            res.primal_infeas = pinf;
            res.dual_infeas = dinf;
            if (pinf < o_.tol_feas && dinf < o_.tol_feas && gap < o_.tol_gap) {
                res.status = IpmStatus::Optimal;
                break;
            }
            merit.push_back(mu + pinf + dinf);
            if (pinf < 1e-6 && dinf < 1e-6 && gap < 1e-6 && merit.back() < best.merit)
                best = {merit.back(), X_, Z_, y_, pobj, dobj, pinf, dinf};
            if (o_.stall_window > 0 && it >= o_.stall_window &&
                merit.back() > 0.9 * merit[static_cast<std::size_t>(it - o_.stall_window)]) {
                res.status = IpmStatus::Stalled;
                break;
            }
            if (!factor()) {
                res.status = IpmStatus::NumericalFailure;
                break;
            }
            // predictor
            BlockMatrices dX, dZ;
            Eigen::VectorXd dy;
            if (!direction(rp, Rd, 0.0, mu, nullptr, nullptr, dX, dy, dZ)) {
                res.status = IpmStatus::NumericalFailure;
                break;
            }
            double ap = max_step(X_, dX), ad = max_step(Z_, dZ);
            ap = std::min(1.0, o_.step * ap);
            ad = std::min(1.0, o_.step * ad);
            const double mu_aff = inner(axpy(X_, ap, dX), axpy(Z_, ad, dZ)) / total_dim;
            double sigma = std::pow(std::max(0.0, mu_aff / mu), 3);
            sigma = std::clamp(sigma, 0.0, 1.0);
            // corrector
            BlockMatrices dX2, dZ2;
            Eigen::VectorXd dy2;
            if (!direction(rp, Rd, sigma, mu, &dX, &dZ, dX2, dy2, dZ2)) {
                res.status = IpmStatus::NumericalFailure;
                break;
            }
            ap = std::min(1.0, o_.step * max_step(X_, dX2));
            ad = std::min(1.0, o_.step * max_step(Z_, dZ2));
            if (ap < 1e-12 && ad < 1e-12) {
                res.status = IpmStatus::NumericalFailure;
                break;
            }
            X_ = axpy(X_, ap, dX2);
            y_ += ad * dy2;
            Z_ = axpy(Z_, ad, dZ2);
            res.status = IpmStatus::MaxIter;
        }
        if (res.status == IpmStatus::NumericalFailure && std::isfinite(best.merit)) {
            X_ = std::move(best.X);
            Z_ = std::move(best.Z);
            y_ = std::move(best.y);
            res.primal_obj = best.pobj;
            res.dual_obj = best.dobj;
            res.primal_infeas = best.pinf;
            res.dual_infeas = best.dinf;
            res.status = IpmStatus::Stalled;
        }
        res.X = X_;
        res.Z = Z_;
        res.y = y_;
        return res;
    }

private:
    const SdpProblem& p_;
    IpmOptions o_;
    int nb_, m_;
    std::vector<BlockPattern> pat_;
    Eigen::VectorXd b_, y_;
    BlockMatrices C_, X_, Z_, Zinv_;
    Eigen::LLT<Eigen::MatrixXd> schur_;

    static double frob(const BlockMatrices& M) {
        double s = 0;
        for (auto& x : M) s += x.squaredNorm();
        return std::sqrt(s);
    }
    double inner(const BlockMatrices& X, const BlockMatrices& Y) const {
        double s = 0;
        for (int k = 0; k < nb_; ++k) s += (X[k].array() * Y[k].array()).sum();
        return s;
    }
    static BlockMatrices sub(const BlockMatrices& X, const BlockMatrices& Y) {
        BlockMatrices r = X;
        for (std::size_t k = 0; k < r.size(); ++k) r[k] -= Y[k];
        return r;
    }
    static BlockMatrices axpy(const BlockMatrices& X, double a, const BlockMatrices& D) {
        BlockMatrices r = X;
        for (std::size_t k = 0; k < r.size(); ++k) r[k] += a * D[k];
        return r;
    }
    void add_sym(BlockMatrices& M, const SdpEntry& e, double v) const {
        if (p_.is_lp(e.block)) {
            M[e.block](e.i, 0) += v;
            return;
        }
        M[e.block](e.i, e.j) += v;
        if (e.i != e.j) M[e.block](e.j, e.i) += v;
    }
    Eigen::VectorXd Aop(const BlockMatrices& X) const {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(m_);
        for (int blk = 0; blk < nb_; ++blk) {
            const auto& pt = pat_[blk];
            for (std::size_t q = 0; q < pt.row.size(); ++q) {
                double acc = 0;
                for (auto& e : pt.ent[q]) {
                    if (p_.is_lp(blk)) acc += e.v * X[blk](e.i, 0);
                    else acc += (e.i == e.j ? 1.0 : 2.0) * e.v * X[blk](e.i, e.j);
                }
                r[pt.row[q]] += acc;
            }
        }
        return r;
    }
    BlockMatrices AT(const Eigen::VectorXd& y) const {
        BlockMatrices M = zero_blocks(p_);
        for (int blk = 0; blk < nb_; ++blk) {
            const auto& pt = pat_[blk];
            for (std::size_t q = 0; q < pt.row.size(); ++q)
                for (auto& e : pt.ent[q]) add_sym(M, e, y[pt.row[q]] * e.v);
        }
        return M;
    }

    void init() {
        X_ = zero_blocks(p_);
        Z_ = zero_blocks(p_);
        y_ = Eigen::VectorXd::Zero(m_);
        std::vector<double> rownorm(static_cast<std::size_t>(m_), 0.0);
        for (int k = 0; k < m_; ++k) {
            for (auto& e : p_.A[k]) rownorm[k] += (e.i == e.j ? 1.0 : 2.0) * e.v * e.v;
            rownorm[k] = std::sqrt(rownorm[k]);
        }
        for (int blk = 0; blk < nb_; ++blk) {
            const double n = p_.dim(blk);
            double xi = std::max(10.0, std::sqrt(n)), eta = std::max(10.0, std::sqrt(n));
            for (std::size_t q = 0; q < pat_[blk].row.size(); ++q) {
                int k = pat_[blk].row[q];
                xi = std::max(xi, n * (1.0 + std::abs(b_[k])) / (1.0 + rownorm[k]));
                eta = std::max(eta, rownorm[k]);
            }
            eta = std::max(eta, C_[blk].norm());
            if (p_.is_lp(blk)) {
                X_[blk].setConstant(xi);
                Z_[blk].setConstant(eta);
            } else {
                X_[blk] = xi * Eigen::MatrixXd::Identity(p_.dim(blk), p_.dim(blk));
                Z_[blk] = eta * Eigen::MatrixXd::Identity(p_.dim(blk), p_.dim(blk));
            }
        }
    }

    // Schur complement M_ij = sum over blocks of tr(A_i X A_j Z^{-1})
    bool factor() {
        Zinv_.assign(static_cast<std::size_t>(nb_), Eigen::MatrixXd());
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m_, m_);
        for (int blk = 0; blk < nb_; ++blk) {
            const auto& pt = pat_[blk];
            if (p_.is_lp(blk)) {
                Zinv_[blk] = Z_[blk].cwiseInverse();
                const int n = p_.dim(blk);
                std::vector<std::vector<std::pair<int, double>>> by_var(static_cast<std::size_t>(n));
                for (std::size_t q = 0; q < pt.row.size(); ++q)
                    for (auto& e : pt.ent[q]) by_var[e.i].push_back({pt.row[q], e.v});
                for (int v = 0; v < n; ++v) {
                    const double w = X_[blk](v, 0) * Zinv_[blk](v, 0);
                    for (auto& [r1, a1] : by_var[v])
                        for (auto& [r2, a2] : by_var[v]) M(r1, r2) += w * a1 * a2;
                }
                continue;
            }
            const int n = p_.dim(blk);
            Eigen::LLT<Eigen::MatrixXd> zl(Z_[blk]);
            if (zl.info() != Eigen::Success) return false;
            Zinv_[blk] = zl.solve(Eigen::MatrixXd::Identity(n, n));
            Zinv_[blk] = 0.5 * (Zinv_[blk] + Zinv_[blk].transpose()).eval();
            const Eigen::MatrixXd& X = X_[blk];
            const Eigen::MatrixXd& Zi = Zinv_[blk];
            std::vector<int> mark(static_cast<std::size_t>(n), -1);
            for (std::size_t q = 0; q < pt.row.size(); ++q) {
                // columns touched by A_q and the dense factor A_q restricted to them
                std::vector<int> cols;
                for (auto& e : pt.ent[q]) {
                    for (int c : {e.i, e.j})
                        if (mark[c] != static_cast<int>(q)) {
                            mark[c] = static_cast<int>(q);
                            cols.push_back(c);
                        }
                }
                std::sort(cols.begin(), cols.end());
                const int kc = static_cast<int>(cols.size());
                std::vector<int> pos(static_cast<std::size_t>(n), -1);
                for (int t = 0; t < kc; ++t) pos[cols[t]] = t;
                Eigen::MatrixXd Ak = Eigen::MatrixXd::Zero(kc, kc);
                for (auto& e : pt.ent[q]) {
                    Ak(pos[e.i], pos[e.j]) += e.v;
                    if (e.i != e.j) Ak(pos[e.j], pos[e.i]) += e.v;
                }
                Eigen::MatrixXd Xc(n, kc), Zr(kc, n);
                for (int t = 0; t < kc; ++t) {
                    Xc.col(t) = X.col(cols[t]);
                    Zr.row(t) = Zi.row(cols[t]);
                }
                const Eigen::MatrixXd G = (Xc * Ak) * Zr;  // X A_q Z^{-1}
                const int rq = pt.row[q];
                for (std::size_t q2 = q; q2 < pt.row.size(); ++q2) {
                    double acc = 0;
                    for (auto& e : pt.ent[q2]) acc += e.i == e.j ? e.v * G(e.i, e.i) : e.v * (G(e.i, e.j) + G(e.j, e.i));
                    M(rq, pt.row[q2]) += acc;
                    if (q2 != q) M(pt.row[q2], rq) += acc;
                }
            }
        }
        schur_.compute(M);
        if (schur_.info() != Eigen::Success) {
            const double reg = 1e-14 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
            M.diagonal().array() += reg;
            schur_.compute(M);
            if (schur_.info() != Eigen::Success) return false;
        }
        return true;
    }

    // dX = sigma mu Z^{-1} - X - (X dZ + corr) Z^{-1}, dZ = Rd - A^T dy, A(dX) = rp
    bool direction(const Eigen::VectorXd& rp, const BlockMatrices& Rd, double sigma, double mu, const BlockMatrices* cX,
                   const BlockMatrices* cZ, BlockMatrices& dX, Eigen::VectorXd& dy, BlockMatrices& dZ) const {
        BlockMatrices base = zero_blocks(p_);
        for (int blk = 0; blk < nb_; ++blk) {
            if (p_.is_lp(blk)) {
                Eigen::ArrayXd t = sigma * mu * Zinv_[blk].array() - X_[blk].array() -
                                   X_[blk].array() * Rd[blk].array() * Zinv_[blk].array();
                if (cX) t -= (*cX)[blk].array() * (*cZ)[blk].array() * Zinv_[blk].array();
                base[blk] = t.matrix();
            } else {
                Eigen::MatrixXd t = sigma * mu * Zinv_[blk] - X_[blk] - X_[blk] * Rd[blk] * Zinv_[blk];
                if (cX) t -= (*cX)[blk] * (*cZ)[blk] * Zinv_[blk];
                base[blk] = t;
            }
        }
        // A applied to a nonsymmetric matrix uses its symmetric part
        for (int blk = 0; blk < nb_; ++blk)
            if (!p_.is_lp(blk)) base[blk] = 0.5 * (base[blk] + base[blk].transpose()).eval();
        Eigen::VectorXd rhs = rp - Aop(base);
        dy = schur_.solve(rhs);
        if (!dy.allFinite()) return false;
        BlockMatrices aty = AT(dy);
        dZ = sub(Rd, aty);
        dX = base;
        for (int blk = 0; blk < nb_; ++blk) {
            if (p_.is_lp(blk)) {
                dX[blk] = (base[blk].array() + X_[blk].array() * aty[blk].array() * Zinv_[blk].array()).matrix();
            } else {
                Eigen::MatrixXd t = X_[blk] * aty[blk] * Zinv_[blk];
                dX[blk] += 0.5 * (t + t.transpose());
            }
        }
        return true;
    }

    double max_step(const BlockMatrices& X, const BlockMatrices& D) const {
        double a = std::numeric_limits<double>::infinity();
        for (int blk = 0; blk < nb_; ++blk) {
            if (p_.is_lp(blk)) {
                for (Eigen::Index i = 0; i < X[blk].rows(); ++i)
                    if (D[blk](i, 0) < 0) a = std::min(a, -X[blk](i, 0) / D[blk](i, 0));
                continue;
            }
            Eigen::LLT<Eigen::MatrixXd> l(X[blk]);
            if (l.info() != Eigen::Success) return 0.0;
            Eigen::MatrixXd Li = l.matrixL().solve(Eigen::MatrixXd::Identity(X[blk].rows(), X[blk].cols()));
            Eigen::MatrixXd S = Li * D[blk] * Li.transpose();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
            const double lmin = es.eigenvalues().minCoeff();
            if (lmin < 0) a = std::min(a, -1.0 / lmin);
        }
        return a;
    }
};

}  // namespace detail

inline IpmResult ipm_solve(const SdpProblem& p, const IpmOptions& o = {}) {
    if (p.rows() == 0) {
        IpmResult r;
        r.status = IpmStatus::Optimal;
        r.X = zero_blocks(p);
        r.Z = zero_blocks(p);
        r.y = Eigen::VectorXd();
        return r;
    }
    return detail::Ipm(p, o).run();
}

// ---------------------------------------------------------------------------
// feasibility

enum class FeasStatus { Feasible, Infeasible, NumericalFailure };

inline const char* to_string(FeasStatus s) {
    switch (s) {
        case FeasStatus::Feasible: return "feasible";
        case FeasStatus::Infeasible: return "infeasible";
        default: return "numerical-failure";
    }
}

struct FeasOptions {
    double residual_tol = 1e-7;   // max |A(X) - b|
    double eig_tol = -1e-8;       // min eigenvalue of every PSD block
    double trace_weight = 1e-8;   // keeps the phase-1 primal bounded
    int polish_rounds = 50;       // alternating projections applied to the solver point
    double polish_give_up = -1e-4;
    IpmOptions ipm{};
};

struct FeasResult {
    FeasStatus status = FeasStatus::NumericalFailure;
    BlockMatrices X;
    double residual = 0;  // max |A(X) - b| in the problem's own units
    double min_eig = 0;
    int iterations = 0;
    IpmStatus ipm_status = IpmStatus::NumericalFailure;
};

// Phase 1: min sum(s+ + s-) + w tr(X) s.t. w_k (A_k(X) - b_k) + s+_k - s-_k = 0 with
// row weights w_k = 1 / max|A_k|. Strictly feasible on both sides by construction.
inline SdpProblem phase1_problem(const SdpProblem& p, double trace_weight) {
    SdpProblem q;
    q.blocks = p.blocks;
    const int m = p.rows();
    const int slack = m > 0 ? q.add_lp_block(2 * m) : -1;
    for (int k = 0; k < m; ++k) {
        double scale = 0;
        for (auto& e : p.A[k]) scale = std::max(scale, std::abs(e.v));
        scale = scale > 0 ? 1.0 / scale : 1.0;
        std::vector<SdpEntry> row;
        for (auto e : p.A[k]) {
            e.v *= scale;
            row.push_back(e);
        }
        row.push_back({slack, 2 * k, 2 * k, 1.0});
        row.push_back({slack, 2 * k + 1, 2 * k + 1, -1.0});
        q.add_row(std::move(row), p.b[k] * scale);
    }
    for (int blk = 0; blk < static_cast<int>(p.blocks.size()); ++blk)
        for (int i = 0; i < p.dim(blk); ++i) q.C.push_back({blk, i, i, trace_weight});
    if (slack >= 0)
        for (int i = 0; i < 2 * m; ++i) q.C.push_back({slack, i, i, 1.0});
    return q;
}

inline FeasResult classify(const SdpProblem& p, BlockMatrices X, const FeasOptions& o) {
    FeasResult r;
    r.X = std::move(X);
    r.residual = p.rows() ? primal_residual(p, r.X).cwiseAbs().maxCoeff() : 0.0;
    r.min_eig = p.blocks.empty() ? 0.0 : min_eigenvalue(p, r.X);
    const bool ok = r.residual <= o.residual_tol && r.min_eig >= o.eig_tol;
    r.status = ok ? FeasStatus::Feasible : FeasStatus::Infeasible;
    return r;
}

// Minimum-norm correction of X onto {A(X) = b}, measured on the upper-triangle entries.
inline BlockMatrices project_affine(const SdpProblem& p, BlockMatrices X, int sweeps = 3) {
    const int m = p.rows();
    if (m == 0) return X;
    std::vector<int> base(p.blocks.size());
    int nv = 0;
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        base[b] = nv;
        const int n = p.dim(static_cast<int>(b));
        nv += p.is_lp(static_cast<int>(b)) ? n : n * (n + 1) / 2;
    }
    auto col = [&](const SdpEntry& e) {
        const int n = p.dim(e.block);
        if (p.is_lp(e.block)) return base[e.block] + e.i;
        return base[e.block] + e.i * n - e.i * (e.i - 1) / 2 + (e.j - e.i);
    };
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < m; ++k)
        for (auto& e : p.A[k])
            if (e.v != 0.0) trip.emplace_back(k, col(e), (e.i == e.j || p.is_lp(e.block)) ? e.v : 2.0 * e.v);
    Eigen::SparseMatrix<double> M(m, nv);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::MatrixXd G = Eigen::MatrixXd(M * M.transpose());
    const double shift = 1e-14 * std::max(1.0, G.diagonal().maxCoeff());
    G.diagonal().array() += shift;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success) return X;
    for (int it = 0; it < sweeps; ++it) {
        Eigen::VectorXd r = -primal_residual(p, X);
        Eigen::VectorXd dx = M.transpose() * ldlt.solve(r);
        for (std::size_t b = 0; b < p.blocks.size(); ++b) {
            const int n = p.dim(static_cast<int>(b));
            if (p.is_lp(static_cast<int>(b))) {
                for (int i = 0; i < n; ++i) X[b](i, 0) += dx[base[b] + i];
                continue;
            }
            int c = base[b];
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j, ++c) {
                    X[b](i, j) += dx[c];
                    if (i != j) X[b](j, i) += dx[c];
                }
        }
    }
    return X;
}

inline void clip_psd(const SdpProblem& p, BlockMatrices& X) {
    for (std::size_t k = 0; k < X.size(); ++k) {
        if (p.is_lp(static_cast<int>(k))) {
            X[k] = X[k].cwiseMax(0.0);
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X[k]);
        X[k] = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
    }
}

// Polish a solver point by alternating projections onto {A(X) = b} and the cone. The
// polished point is accepted only when it meets both tolerances; otherwise the solver's
// own point is reported.
inline FeasResult classify_projected(const SdpProblem& p, BlockMatrices X, const FeasOptions& o) {
    BlockMatrices Y = X;
    double prev = -std::numeric_limits<double>::infinity();
    for (int round = 0; round < o.polish_rounds; ++round) {
        Y = project_affine(p, std::move(Y));
        FeasResult r = classify(p, Y, o);
        if (r.status == FeasStatus::Feasible) return r;
        if (r.min_eig < o.polish_give_up || (round > 0 && r.min_eig < prev + 1e-3 * std::abs(prev))) break;
        prev = r.min_eig;
        clip_psd(p, Y);
    }
    return classify(p, std::move(X), o);
}

inline FeasResult feasibility_internal(const SdpProblem& p, const FeasOptions& o = {}) {
    if (p.rows() == 0) return classify(p, zero_blocks(p), o);
    SdpProblem q = phase1_problem(p, o.trace_weight);
    IpmResult ir = ipm_solve(q, o.ipm);
    BlockMatrices X(ir.X.begin(), ir.X.begin() + static_cast<std::ptrdiff_t>(p.blocks.size()));
    FeasResult r = classify_projected(p, std::move(X), o);
    r.iterations = ir.iterations;
    r.ipm_status = ir.status;
    if (r.status == FeasStatus::Infeasible && ir.status == IpmStatus::NumericalFailure) r.status = FeasStatus::NumericalFailure;
    return r;
}

// ---------------------------------------------------------------------------
// SDPA sparse format. The problem above is the SDPA dual form with Y = X, F_k = A_k,
// c_k = b_k and F_0 = -C.

inline void write_sdpa(std::ostream& os, const SdpProblem& p) {
    os << "\"pies SDP export\"\n";
    os << p.rows() << " = mDIM\n";
    os << p.blocks.size() << " = nBLOCK\n";
    for (std::size_t k = 0; k < p.blocks.size(); ++k) os << (k ? " " : "") << p.blocks[k];
    os << " = bLOCKsTRUCT\n";
    os << std::setprecision(17);
    for (int k = 0; k < p.rows(); ++k) os << (k ? " " : "") << p.b[k];
    os << "\n";
    for (auto& e : p.C)
        if (e.v != 0.0) os << 0 << ' ' << e.block + 1 << ' ' << e.i + 1 << ' ' << e.j + 1 << ' ' << -e.v << "\n";
    for (int k = 0; k < p.rows(); ++k)
        for (auto& e : p.A[k])
            if (e.v != 0.0) os << k + 1 << ' ' << e.block + 1 << ' ' << e.i + 1 << ' ' << e.j + 1 << ' ' << e.v << "\n";
}

inline void export_sdpa(const SdpProblem& p, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_sdpa(f, p);
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline SdpProblem read_sdpa(std::istream& is) {
    std::string line;
    // comments start with '"' or '*'; punctuation ,(){} counts as whitespace
    auto clean = [](std::string s) {
        for (char& c : s)
            if (c == ',' || c == '(' || c == ')' || c == '{' || c == '}') c = ' ';
        return s;
    };
    SdpProblem p;
    int m = -1, nb = -1;
    bool have_struct = false;
    while (std::getline(is, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '"' || line[first] == '*') continue;
        std::istringstream ls(clean(line));
        if (m < 0) {
            ls >> m;
            continue;
        }
        if (nb < 0) {
            ls >> nb;
            continue;
        }
        if (!have_struct) {
            have_struct = true;
            int d;
            while (static_cast<int>(p.blocks.size()) < nb && ls >> d) p.blocks.push_back(d);
            continue;
        }
        if (static_cast<int>(p.b.size()) < m) {
            double v;
            while (static_cast<int>(p.b.size()) < m && ls >> v) p.b.push_back(v);
            continue;
        }
        int mat, blk, i, j;
        double v;
        if (!(ls >> mat >> blk >> i >> j >> v)) throw std::runtime_error("SDPA parse error: " + line);
        if (p.A.empty()) p.A.resize(static_cast<std::size_t>(m));
        if (mat < 0 || mat > m || blk < 1 || blk > nb) throw std::runtime_error("SDPA index out of range: " + line);
        SdpEntry e{blk - 1, i - 1, j - 1, v};
        p.check_entry(e);
        if (mat == 0) {
            e.v = -v;
            p.C.push_back(e);
        } else {
            p.A[mat - 1].push_back(e);
        }
    }
    if (m < 0 || nb < 0) throw std::runtime_error("SDPA parse error: missing header");
    if (static_cast<int>(p.blocks.size()) != nb || static_cast<int>(p.b.size()) != m)
        throw std::runtime_error("SDPA parse error: truncated header");
    p.A.resize(static_cast<std::size_t>(m));
    return p;
}

inline SdpProblem import_sdpa(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    return read_sdpa(f);
}

// ---------------------------------------------------------------------------
// backends

enum class Backend { Internal, SdpaFile };

struct BackendUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// External solver: the command in PIES_SDPA_SOLVER is run as `<cmd> <in.dat-s> <out>`
// on the phase-1 problem and must write one line per primal entry, "block i j value"
// (1-based, upper triangle), for the matrix Y of the SDPA dual form.
inline FeasResult feasibility_sdpa_file(const SdpProblem& p, const FeasOptions& o,
                                        const std::filesystem::path& workdir = std::filesystem::temp_directory_path()) {
    const char* cmd = std::getenv("PIES_SDPA_SOLVER");
    if (!cmd || !*cmd) throw BackendUnavailable("PIES_SDPA_SOLVER is not set");
    if (p.rows() == 0) return classify(p, zero_blocks(p), o);
    SdpProblem q = phase1_problem(p, o.trace_weight);
    const auto in = workdir / "pies_phase1.dat-s";
    const auto out = workdir / "pies_phase1.out";
    export_sdpa(q, in);
    std::filesystem::remove(out);
    const std::string call = std::string(cmd) + " '" + in.string() + "' '" + out.string() + "'";
    if (std::system(call.c_str()) != 0) throw BackendUnavailable("external solver failed: " + call);
    std::ifstream f(out);
    if (!f) throw BackendUnavailable("external solver wrote no result");
    BlockMatrices Y = zero_blocks(q);
    int blk, i, j;
    double v;
    while (f >> blk >> i >> j >> v) {
        SdpEntry e{blk - 1, i - 1, j - 1, v};
        q.check_entry(e);
        if (q.is_lp(e.block)) {
            Y[e.block](e.i, 0) = v;
        } else {
            Y[e.block](e.i, e.j) = v;
            Y[e.block](e.j, e.i) = v;
        }
    }
    BlockMatrices X(Y.begin(), Y.begin() + static_cast<std::ptrdiff_t>(p.blocks.size()));
    FeasResult r = classify_projected(p, std::move(X), o);
    r.ipm_status = IpmStatus::Optimal;
    return r;
}

inline FeasResult solve_feasibility(const SdpProblem& p, Backend backend, const FeasOptions& o = {}) {
    return backend == Backend::Internal ? feasibility_internal(p, o) : feasibility_sdpa_file(p, o);
}

}  // namespace pies

#endif

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

// Method-of-lines simulators for the PDE (finite differences) and for its PIE
// (piecewise-constant collocation), plus decay-bound checks and CSV output.
#ifndef PIES_SIMULATE_HPP
#define PIES_SIMULATE_HPP

#include "pies/pde2pie.hpp"

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pies {

struct SimConfig {
    int N = 256;            // grid intervals (PDE) or cells (PIE)
    double T = 1.0;         // horizon
    int samples = 201;      // uniform output times on [0, T]
    double rtol = 1e-8;
    double atol = 1e-10;
    double blowup_factor = 1e3;
    bool store_states = false;
    Func initial;           // u0 for the PDE, v0 for the PIE
};

struct Trajectory {
    std::vector<double> times, norms;
    std::vector<double> grid;                 // nodes (PDE) or cell midpoints (PIE)
    std::vector<std::vector<double>> states;  // u on the grid when requested
    std::vector<std::vector<double>> fundamental;  // v on the cells when requested (PIE only)
    bool blew_up = false;
    std::string note;
    double condition = 0;  // condition number of the discretized T (PIE only)
};

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

struct BlowUp {};

inline void validate_config(const SimConfig& c) {
    if (c.N < 32) throw std::invalid_argument("grid size must be at least 32");
    if (!(c.rtol > 0) || !(c.atol > 0)) throw std::invalid_argument("tolerances must be positive");
    if (!(c.T > 0)) throw std::invalid_argument("horizon must be positive");
    if (c.samples < 2) throw std::invalid_argument("need at least two output times");
    if (!c.initial) throw std::invalid_argument("initial condition missing");
}

inline std::vector<double> output_times(const SimConfig& c) {
    std::vector<double> t(static_cast<std::size_t>(c.samples));
    for (int k = 0; k < c.samples; ++k) t[k] = c.T * k / (c.samples - 1);
    return t;
}

// one-sided derivative of f at x in direction dir (+1 or -1), fourth order
inline double edge_derivative(const Func& f, double x, int dir) {
    const double h = 1e-3 * dir;
    return (-25 * f(x) + 48 * f(x + h) - 36 * f(x + 2 * h) + 16 * f(x + 3 * h) - 3 * f(x + 4 * h)) / (12 * h);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PDE: centered second-order differences on N+1 nodes; the two boundary values are
// eliminated through the boundary rows using one-sided second-order derivatives.

class PdeDiscretization {
public:
    PdeDiscretization(const PdeModel& m, int N) : m_(m), N_(N) {
        m.validate();
        if (m.n != 2) throw std::invalid_argument("the PDE simulator supports second-order PDEs");
        a_ = m.domain.lo();
        b_ = m.domain.hi();
        h_ = (b_ - a_) / N;
        for (int i = 0; i <= N; ++i) grid_.push_back(a_ + i * h_);
        // B [u(a), u'(a), u(b), u'(b)] = 0 with u'(a) ~ (-3u0 + 4u1 - u2)/2h, u'(b) ~ (3uN - 4uN-1 + uN-2)/2h
        for (int k = 0; k < 2; ++k) {
            auto& r = m.bc.B[static_cast<std::size_t>(k)];
            const double b0 = r[0].get_d(), b1 = r[1].get_d(), b2 = r[2].get_d(), b3 = r[3].get_d();
            M_(k, 0) = b0 - 3 * b1 / (2 * h_);
            M_(k, 1) = b2 + 3 * b3 / (2 * h_);
            c_[k] = {4 * b1 / (2 * h_), -b1 / (2 * h_), -4 * b3 / (2 * h_), b3 / (2 * h_)};
        }
        if (std::abs(M_.determinant()) < 1e-12 * M_.cwiseAbs().maxCoeff() * M_.cwiseAbs().maxCoeff())
            throw std::invalid_argument("boundary rows cannot be eliminated on this grid");
        Minv_ = M_.inverse();
        for (auto& t : m.terms) {
            std::vector<double> c;
            for (double s : grid_) c.push_back(t.coef.eval({{var::s, s}}));
            coef_.push_back(std::move(c));
        }
    }

    int interior() const { return N_ - 1; }
    const std::vector<double>& grid() const { return grid_; }

    // full nodal vector from the interior unknowns
    std::vector<double> full(const std::vector<double>& y) const {
        std::vector<double> u(static_cast<std::size_t>(N_ + 1));
        for (int i = 1; i < N_; ++i) u[i] = y[i - 1];
        Eigen::Vector2d rhs;
        for (int k = 0; k < 2; ++k)
            rhs[k] = -(c_[k][0] * u[1] + c_[k][1] * u[2] + c_[k][2] * u[N_ - 1] + c_[k][3] * u[N_ - 2]);
        Eigen::Vector2d e = Minv_ * rhs;
        u[0] = e[0];
        u[N_] = e[1];
        return u;
    }

    void rhs(const std::vector<double>& y, std::vector<double>& dy) const {
        auto u = full(y);
        dy.assign(y.size(), 0.0);
        for (int i = 1; i < N_; ++i) {
            const double d[3] = {u[i], (u[i + 1] - u[i - 1]) / (2 * h_), (u[i + 1] - 2 * u[i] + u[i - 1]) / (h_ * h_)};
            double acc = 0;
            for (std::size_t t = 0; t < m_.terms.size(); ++t) {
                double p = coef_[t][i];
                for (int j = 0; j < 3; ++j)
                    for (int e = 0; e < m_.terms[t].exponents[j]; ++e) p *= d[j];
                acc += p;
            }
            dy[i - 1] = acc;
        }
    }

    // composite Simpson (trapezoid when N is odd)
    double norm(const std::vector<double>& u) const {
        double acc = 0;
        if (N_ % 2 == 0) {
            for (int i = 0; i <= N_; ++i) {
                const double w = (i == 0 || i == N_) ? 1 : (i % 2 ? 4 : 2);
                acc += w * u[i] * u[i];
            }
            acc *= h_ / 3;
        } else {
            for (int i = 0; i <= N_; ++i) acc += (i == 0 || i == N_ ? 0.5 : 1.0) * u[i] * u[i];
            acc *= h_;
        }
        return std::sqrt(acc);
    }

    double boundary_residual(const Func& u0) const {
        const double ua = u0(a_), ub = u0(b_);
        const double da = detail::edge_derivative(u0, a_, 1), db = detail::edge_derivative(u0, b_, -1);
        double worst = 0;
        for (auto& r : m_.bc.B)
            worst = std::max(worst, std::abs(r[0].get_d() * ua + r[1].get_d() * da + r[2].get_d() * ub + r[3].get_d() * db));
        return worst;
    }

private:
    PdeModel m_;
    int N_;
    double a_ = 0, b_ = 1, h_ = 0;
    std::vector<double> grid_;
    Eigen::Matrix2d M_, Minv_;
    std::array<std::array<double, 4>, 2> c_{};
    std::vector<std::vector<double>> coef_;
};

inline Trajectory simulate_pde(const PdeModel& pde, const SimConfig& cfg) {
    detail::validate_config(cfg);
    PdeDiscretization D(pde, cfg.N);
    const double bres = D.boundary_residual(cfg.initial);
    if (bres > 1e-8) throw std::invalid_argument("initial condition violates the boundary conditions (residual " + std::to_string(bres) + ")");
    Trajectory tr;
    tr.grid = D.grid();
    std::vector<double> y;
    for (int i = 1; i < cfg.N; ++i) y.push_back(cfg.initial(tr.grid[i]));
    const double n0 = D.norm(D.full(y));
    auto times = detail::output_times(cfg);
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_dense_output(cfg.atol, cfg.rtol, ode::runge_kutta_dopri5<std::vector<double>>());
    double sup0 = 0;
    for (double v : y) sup0 = std::max(sup0, std::abs(v));
    const double sup_limit = cfg.blowup_factor * std::max(sup0, 1e-300);
    // sup-norm guard inside the right-hand side stops finite-time blow-up before the step size collapses
    auto sys = [&](const std::vector<double>& x, std::vector<double>& dx, double) {
        for (double v : x)
            if (!(std::abs(v) <= sup_limit)) throw detail::BlowUp{};
        D.rhs(x, dx);
    };
    auto obs = [&](const std::vector<double>& x, double t) {
        auto u = D.full(x);
        const double n = D.norm(u);
        tr.times.push_back(t);
        tr.norms.push_back(n);
        if (cfg.store_states) tr.states.push_back(u);
        if (!std::isfinite(n) || n > cfg.blowup_factor * std::max(n0, 1e-300)) throw detail::BlowUp{};
    };
    try {
        ode::integrate_times(stepper, sys, y, times.begin(), times.end(), 1e-6, obs, ode::max_step_checker(1000000));
    } catch (const detail::BlowUp&) {
        tr.blew_up = true;
        tr.note = "state exceeded the blow-up threshold";
    } catch (const std::exception& e) {
        tr.blew_up = true;
        tr.note = std::string("integration stopped: ") + e.what();
    }
    return tr;
}

// ---------------------------------------------------------------------------
// PIE: v piecewise constant on N cells, collocation at the midpoints; the integrals of
// the polynomial kernels over each cell are exact Gauss-Legendre sums.

class PieDiscretization {
public:
    PieDiscretization(const PieModel& pie, int N) : pie_(pie), N_(N) {
        a_ = pie.domain.lo();
        b_ = pie.domain.hi();
        h_ = (b_ - a_) / N;
        for (int i = 0; i <= N; ++i) edges_.push_back(a_ + i * h_);
        for (int i = 0; i < N; ++i) mid_.push_back(a_ + (i + 0.5) * h_);
        Tm_ = op_matrix(pie.T, mid_);
        lu_.compute(Tm_);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Tm_);
        cond_ = svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
        if (!std::isfinite(cond_) || cond_ > 1e12) throw SimulationError("discretized T is ill-conditioned (condition number " + std::to_string(cond_) + ")");
        // norm of T v with two Gauss points per cell
        auto g2 = gauss_legendre(8);
        for (int i = 0; i < N; ++i)
            for (std::size_t k = 0; k < g2.x.size(); ++k) {
                nodes_.push_back(edges_[i] + 0.5 * h_ * (g2.x[k] + 1));
                weights_.push_back(0.5 * h_ * g2.w[k]);
            }
        Tq_ = op_matrix(pie.T, nodes_);
        for (int k = 1; k <= pie.degree(); ++k)
            for (auto& t : pie.Ck(k).terms) {
                std::vector<int> ids;
                for (auto& f : t.factors) ids.push_back(factor_id(f));
                terms_.push_back(std::move(ids));
            }
    }

    int cells() const { return N_; }
    const std::vector<double>& midpoints() const { return mid_; }
    double condition() const { return cond_; }
    const Eigen::MatrixXd& T_matrix() const { return Tm_; }

    Eigen::VectorXd sample(const Func& v) const {
        // cell averages
        auto g = gauss_legendre(8);
        Eigen::VectorXd x(N_);
        for (int i = 0; i < N_; ++i) {
            double acc = 0;
            for (std::size_t k = 0; k < g.x.size(); ++k) acc += 0.5 * g.w[k] * v(edges_[i] + 0.5 * h_ * (g.x[k] + 1));
            x[i] = acc;
        }
        return x;
    }

    Eigen::VectorXd rhs(const Eigen::VectorXd& v) const {
        auto fv = factor_values(v);
        Eigen::VectorXd r = Eigen::VectorXd::Zero(N_);
        for (auto& ids : terms_) {
            Eigen::VectorXd p = Eigen::VectorXd::Ones(N_);
            for (int id : ids) p = p.cwiseProduct(fv[id]);
            r += p;
        }
        return lu_.solve(r);
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& v) const {
        auto fv = factor_values(v);
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N_, N_);
        for (auto& ids : terms_)
            for (std::size_t j = 0; j < ids.size(); ++j) {
                Eigen::VectorXd p = Eigen::VectorXd::Ones(N_);
                for (std::size_t l = 0; l < ids.size(); ++l)
                    if (l != j) p = p.cwiseProduct(fv[ids[l]]);
                J += p.asDiagonal() * mats_[ids[j]];
            }
        return lu_.solve(J);
    }

    Eigen::VectorXd state(const Eigen::VectorXd& v) const { return Tm_ * v; }
    double norm(const Eigen::VectorXd& v) const {
        Eigen::VectorXd u = Tq_ * v;
        double acc = 0;
        for (Eigen::Index k = 0; k < u.size(); ++k) acc += weights_[k] * u[k] * u[k];
        return std::sqrt(acc);
    }

    // (F v)(p) for piecewise-constant v, one row per point
    Eigen::MatrixXd op_matrix(const PiOp& F, const std::vector<double>& pts) const {
        if (F.rows() != 1 || F.cols() != 1) throw std::invalid_argument("PIE simulation needs scalar operators");
        const auto& g = gauss_legendre(8);
        const Poly &R0 = F.R0(0, 0), &R1 = F.R1(0, 0), &R2 = F.R2(0, 0);
        std::array<double, kMaxVars> x{};
        auto integ = [&](const Poly& K, double s, double lo, double hi) {
            if (K.is_zero() || hi <= lo) return 0.0;
            double acc = 0;
            x[var::s] = s;
            for (std::size_t k = 0; k < g.x.size(); ++k) {
                x[var::theta(1)] = lo + 0.5 * (hi - lo) * (g.x[k] + 1);
                acc += 0.5 * (hi - lo) * g.w[k] * K.eval(x.data());
            }
            return acc;
        };
        Eigen::MatrixXd A(static_cast<Eigen::Index>(pts.size()), N_);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double s = pts[i];
            for (int j = 0; j < N_; ++j) {
                const double lo = edges_[j], hi = edges_[j + 1];
                A(static_cast<Eigen::Index>(i), j) = integ(R1, s, lo, std::min(hi, s)) + integ(R2, s, std::max(lo, s), hi);
            }
            if (!R0.is_zero()) {
                int cell = std::min(N_ - 1, static_cast<int>((s - a_) / h_));
                x[var::s] = s;
                A(static_cast<Eigen::Index>(i), cell) += R0.eval(x.data());
            }
        }
        return A;
    }

private:
    PieModel pie_;
    int N_;
    double a_ = 0, b_ = 1, h_ = 0, cond_ = 0;
    std::vector<double> edges_, mid_, nodes_, weights_;
    Eigen::MatrixXd Tm_, Tq_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    std::vector<PiOp> ops_;
    std::vector<Eigen::MatrixXd> mats_;
    std::vector<std::vector<int>> terms_;

    int factor_id(const PiOp& f) {
        for (std::size_t k = 0; k < ops_.size(); ++k)
            if (ops_[k] == f) return static_cast<int>(k);
        ops_.push_back(f);
        mats_.push_back(op_matrix(f, mid_));
        return static_cast<int>(ops_.size()) - 1;
    }
    std::vector<Eigen::VectorXd> factor_values(const Eigen::VectorXd& v) const {
        std::vector<Eigen::VectorXd> fv;
        for (auto& m : mats_) fv.push_back(m * v);
        return fv;
    }
};

inline Trajectory simulate_pie(const PieModel& pie, const SimConfig& cfg) {
    detail::validate_config(cfg);
    PieDiscretization D(pie, cfg.N);
    Trajectory tr;
    tr.grid = D.midpoints();
    tr.condition = D.condition();
    namespace ode = boost::numeric::odeint;
    namespace ublas = boost::numeric::ublas;
    using vec = ublas::vector<double>;
    using mat = ublas::matrix<double>;
    const int N = cfg.N;
    Eigen::VectorXd v0 = D.sample(cfg.initial);
    vec y(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) y[i] = v0[i];
    const double n0 = D.norm(v0);
    auto to_eigen = [N](const vec& x) {
        Eigen::VectorXd e(N);
        for (int i = 0; i < N; ++i) e[i] = x[i];
        return e;
    };
    auto sys = [&](const vec& x, vec& dx, double) {
        Eigen::VectorXd r = D.rhs(to_eigen(x));
        for (int i = 0; i < N; ++i) dx[i] = r[i];
    };
    auto jac = [&](const vec& x, mat& J, double, vec& dfdt) {
        Eigen::MatrixXd Je = D.jacobian(to_eigen(x));
        for (int i = 0; i < N; ++i) {
            dfdt[i] = 0;
            for (int j = 0; j < N; ++j) J(i, j) = Je(i, j);
        }
    };
    auto obs = [&](const vec& x, double t) {
        Eigen::VectorXd v = to_eigen(x);
        const double n = D.norm(v);
        tr.times.push_back(t);
        tr.norms.push_back(n);
        if (cfg.store_states) {
            Eigen::VectorXd u = D.state(v);
            tr.states.emplace_back(u.data(), u.data() + u.size());
            tr.fundamental.emplace_back(v.data(), v.data() + v.size());
        }
        if (!std::isfinite(n) || (n0 > 0 && n > cfg.blowup_factor * n0)) throw detail::BlowUp{};
    };
    auto times = detail::output_times(cfg);
    try {
        auto stepper = ode::make_dense_output(cfg.atol, cfg.rtol, ode::rosenbrock4<double>());
        ode::integrate_times(stepper, std::make_pair(sys, jac), y, times.begin(), times.end(), 1e-6, obs,
                             ode::max_step_checker(1000000));
    } catch (const detail::BlowUp&) {
        tr.blew_up = true;
        tr.note = "norm exceeded the blow-up threshold";
    } catch (const std::exception& e) {
        tr.blew_up = true;
        tr.note = std::string("integration stopped: ") + e.what();
    }
    return tr;
}

// ---------------------------------------------------------------------------

struct DecayReport {
    std::vector<bool> within;  // ||u(t)|| <= M e^{-lambda t} ||u(0)|| per sample
    double margin = 0;         // min over samples of (bound - norm) / ||u(0)||
    bool pass = false;
};

inline DecayReport check_decay_bound(const Trajectory& tr, double M, double lambda, double tol = 1e-2) {
    if (tr.norms.empty()) throw std::invalid_argument("empty trajectory");
    DecayReport r;
    const double n0 = tr.norms.front();
    r.margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < tr.norms.size(); ++k) {
        const double bound = M * std::exp(-lambda * tr.times[k]) * n0;
        r.within.push_back(tr.norms[k] <= bound * (1 + 1e-12));
        r.margin = std::min(r.margin, n0 > 0 ? (bound - tr.norms[k]) / n0 : bound - tr.norms[k]);
    }
    if (tr.blew_up) r.margin = -std::numeric_limits<double>::infinity();
    r.pass = r.margin >= -tol;
    return r;
}

// log-slope of the norm over the first output interval
inline double initial_decay_rate(const Trajectory& tr) {
    if (tr.norms.size() < 2) throw std::invalid_argument("trajectory too short");
    return -(std::log(tr.norms[1]) - std::log(tr.norms[0])) / (tr.times[1] - tr.times[0]);
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "t,norm";
    if (!tr.states.empty())
        for (double s : tr.grid) os << ",u@" << s;
    os << "\n";
    os.precision(12);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        os << tr.times[k] << "," << tr.norms[k];
        if (k < tr.states.size())
            for (double u : tr.states[k]) os << "," << u;
        os << "\n";
    }
}

struct BoundSeries {
    double r = 0, M = 1, lambda = 0;
    Trajectory traj;
};

// columns: r, t, norm, bound = M r e^{-lambda t}
inline void write_plot_data(std::ostream& os, const std::vector<BoundSeries>& series) {
    os << "r,t,norm,bound\n";
    os.precision(12);
    for (auto& s : series)
        for (std::size_t k = 0; k < s.traj.times.size(); ++k)
            os << s.r << "," << s.traj.times[k] << "," << s.traj.norms[k] << "," << s.M * s.r * std::exp(-s.lambda * s.traj.times[k]) << "\n";
}

}  // namespace pies

#endif

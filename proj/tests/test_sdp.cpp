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

#include "pies/sdp.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <random>
#include <sstream>

using namespace pies;
using Catch::Approx;

namespace {

Eigen::MatrixXd random_psd(std::mt19937& rng, int n, int rank) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd F(n, rank);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rank; ++j) F(i, j) = g(rng);
    return F * F.transpose();
}

SdpProblem random_feasible(std::mt19937& rng, int n, int rank, int m) {
    std::normal_distribution<double> g;
    SdpProblem p;
    p.add_psd_block(n);
    p.add_lp_block(2);
    BlockMatrices X0 = zero_blocks(p);
    X0[0] = random_psd(rng, n, rank);
    X0[1] << 0.5, 0.0;
    for (int k = 0; k < m; ++k) {
        std::vector<SdpEntry> row;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) row.push_back({0, i, j, g(rng)});
        row.push_back({1, 0, 0, g(rng)});
        row.push_back({1, 1, 1, g(rng)});
        double rhs = entry_inner(p, row, X0);
        p.add_row(row, rhs);
    }
    return p;
}

}  // namespace

TEST_CASE("smallest eigenvalue as an SDP", "[sdp]") {
    SdpProblem p;
    p.add_psd_block(2);
    p.C = {{0, 0, 0, 2.0}, {0, 0, 1, 1.0}, {0, 1, 1, 3.0}};
    p.add_row({{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, 1.0);
    IpmResult r = ipm_solve(p);
    REQUIRE(r.status == IpmStatus::Optimal);
    CHECK(r.primal_obj == Approx((5.0 - std::sqrt(5.0)) / 2).epsilon(1e-8));
    CHECK(r.dual_obj == Approx((5.0 - std::sqrt(5.0)) / 2).epsilon(1e-8));
}

TEST_CASE("linear program block", "[sdp]") {
    SdpProblem p;
    p.add_lp_block(3);
    p.C = {{0, 0, 0, 1.0}, {0, 1, 1, 2.0}, {0, 2, 2, -1.0}};
    p.add_row({{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, 1.0);
    p.add_row({{0, 2, 2, 1.0}, {0, 1, 1, 1.0}}, 2.0);
    // x2 = 2 - x1', objective x0 + 2 x1 - (2 - x1) = x0 + 3 x1 - 2, minimized at x0 = 1, x1 = 0
    IpmResult r = ipm_solve(p);
    REQUIRE(r.status == IpmStatus::Optimal);
    CHECK(r.primal_obj == Approx(-1.0).margin(1e-8));
}

TEST_CASE("trivial feasibility cases", "[sdp]") {
    SdpProblem empty;
    empty.add_psd_block(3);
    CHECK(feasibility_internal(empty).status == FeasStatus::Feasible);

    SdpProblem neg;
    neg.add_psd_block(1);
    neg.add_row({{0, 0, 0, 1.0}}, -1.0);
    FeasResult r = feasibility_internal(neg);
    CHECK(r.status == FeasStatus::Infeasible);
    CHECK(r.residual == Approx(1.0).margin(1e-6));

    SdpProblem pos = neg;
    pos.b[0] = 2.0;
    r = feasibility_internal(pos);
    CHECK(r.status == FeasStatus::Feasible);
    CHECK(r.residual <= 1e-7);
}

TEST_CASE("feasible only on the boundary of the cone", "[sdp]") {
    // X11 = 0 forces X12 = 0; X22 = 1 is then attainable
    SdpProblem p;
    p.add_psd_block(2);
    p.add_row({{0, 0, 0, 1.0}}, 0.0);
    p.add_row({{0, 1, 1, 1.0}}, 1.0);
    FeasResult r = feasibility_internal(p);
    CHECK(r.status == FeasStatus::Feasible);
    CHECK(r.min_eig >= -1e-8);

    SdpProblem q = p;
    q.add_row({{0, 0, 1, 0.5}}, 1.0);  // X12 = 1 contradicts X11 = 0
    r = feasibility_internal(q);
    CHECK(r.status == FeasStatus::Infeasible);
    CHECK(r.residual > 1e-3);
}

TEST_CASE("random feasible problems are certified", "[sdp][property]") {
    std::mt19937 rng(101);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 4 + trial, rank = 1 + trial % 3;
        SdpProblem p = random_feasible(rng, n, rank, n + 2);
        FeasResult r = feasibility_internal(p);
        CHECK(r.status == FeasStatus::Feasible);
        CHECK(r.residual <= 1e-7);
        CHECK(r.min_eig >= -1e-8);
    }
}

TEST_CASE("SDPA sparse round trip", "[sdp]") {
    SdpProblem p;
    p.add_psd_block(2);
    p.add_lp_block(1);
    p.C = {{0, 0, 1, 0.25}};
    p.add_row({{0, 0, 0, 1.0}, {0, 0, 1, -0.1}, {0, 1, 1, 3.0}, {1, 0, 0, 1.0 / 3.0}}, 0.7);
    std::stringstream ss;
    write_sdpa(ss, p);
    SdpProblem q = read_sdpa(ss);
    CHECK(q == p);

    SdpProblem e;
    std::stringstream es;
    write_sdpa(es, e);
    SdpProblem f = read_sdpa(es);
    CHECK(f.rows() == 0);
    CHECK(f.blocks.empty());

    std::stringstream bad("\"c\"\n1\n1\n2\n1.0\n1 1 3 1 1.0\n");
    CHECK_THROWS(read_sdpa(bad));
}

TEST_CASE("external backend", "[sdp]") {
    SdpProblem p;
    p.add_psd_block(2);
    p.add_row({{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, 1.0);
    p.add_row({{0, 0, 1, 1.0}}, 0.25);
    const char* solver = std::getenv("PIES_SDPA_SOLVER");
    if (!solver || !*solver) {
        CHECK_THROWS_AS(feasibility_sdpa_file(p, {}), BackendUnavailable);
        SKIP("PIES_SDPA_SOLVER not set");
    }
    FeasResult ext = feasibility_sdpa_file(p, {});
    FeasResult in = feasibility_internal(p);
    CHECK(ext.status == FeasStatus::Feasible);
    CHECK(in.status == FeasStatus::Feasible);
    SdpProblem neg;
    neg.add_psd_block(1);
    neg.add_row({{0, 0, 0, 1.0}}, -1.0);
    CHECK(feasibility_sdpa_file(neg, {}).status == FeasStatus::Infeasible);
}

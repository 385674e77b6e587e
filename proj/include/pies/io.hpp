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


#ifndef PIES_IO_HPP
#define PIES_IO_HPP

#include "pies/pde2pie.hpp"
#include "pies/sosprog.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pies::io {

using json = nlohmann::json;

inline constexpr const char* kPdeFormat = "pies.pde/1";
inline constexpr const char* kPieFormat = "pies.pie/1";
inline constexpr const char* kDistPolyFormat = "pies.distpoly/1";
inline constexpr const char* kCertificateFormat = "pies.certificate/1";

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// scalars

inline std::string rational_str(const Rational& r) { return r.get_str(); }

// Numbers may be given as JSON numbers or as exact strings ("1/3").
inline Rational rational_of(const json& j) {
    if (j.is_string()) return rational_from_string(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long>());
    if (j.is_number()) return rational_from_double(j.get<double>());
    throw FormatError("expected a number or a rational string, got " + j.dump());
}

inline Poly poly_of(const json& j) {
    if (j.is_string()) return parse_poly(j.get<std::string>());
    return Poly(rational_of(j));
}

inline void check_format(const json& j, const char* fmt) {
    if (!j.is_object() || !j.contains("format")) throw FormatError(std::string("missing format field, expected ") + fmt);
    if (j.at("format") != fmt)
        throw FormatError("unsupported format " + j.at("format").dump() + ", expected " + fmt);
}

inline json domain_json(const Domain& d) { return json::array({rational_str(d.a), rational_str(d.b)}); }

inline Domain domain_of(const json& j) {
    if (!j.is_array() || j.size() != 2) throw FormatError("domain must be [a, b]");
    return Domain(rational_of(j[0]), rational_of(j[1]));
}

// ---------------------------------------------------------------------------
// PI operators

inline json matrix_json(const PolyMatrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j).to_string());
        rows.push_back(std::move(row));
    }
    return rows;
}

inline PolyMatrix matrix_of(const json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw FormatError("matrix must be a nonempty array of rows");
    const int rows = static_cast<int>(j.size()), cols = static_cast<int>(j[0].size());
    PolyMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[i].size()) != cols) throw FormatError("ragged matrix");
        for (int k = 0; k < cols; ++k) m(i, k) = poly_of(j[i][k]);
    }
    return m;
}

inline json pi_json(const PiOp& p) {
    return {{"R0", matrix_json(p.R0)}, {"R1", matrix_json(p.R1)}, {"R2", matrix_json(p.R2)}};
}

inline PiOp pi_of(const json& j, const Domain& dom) {
    return PiOp(matrix_of(j.at("R0")), matrix_of(j.at("R1")), matrix_of(j.at("R2")), dom);
}

inline json tensor_json(const TensorPiOp& h) {
    json terms = json::array();
    for (auto& t : h.terms) {
        json fs = json::array();
        for (auto& f : t.factors) fs.push_back(pi_json(f));
        terms.push_back(std::move(fs));
    }
    return {{"degree", h.degree}, {"terms", std::move(terms)}};
}

inline TensorPiOp tensor_of(const json& j, const Domain& dom) {
    TensorPiOp h(j.at("degree").get<int>(), dom);
    for (auto& t : j.at("terms")) {
        std::vector<PiOp> fs;
        for (auto& f : t) fs.push_back(pi_of(f, dom));
        h.add_term(std::move(fs));
    }
    return h;
}

// ---------------------------------------------------------------------------
// PDE and PIE models

inline json to_json(const PdeModel& m) {
    json terms = json::array();
    for (auto& t : m.terms) terms.push_back({{"coef", t.coef.to_string()}, {"exponents", t.exponents}});
    json B = json::array();
    for (auto& row : m.bc.B) {
        json r = json::array();
        for (auto& x : row) r.push_back(rational_str(x));
        B.push_back(std::move(r));
    }
    return {{"format", kPdeFormat}, {"domain", domain_json(m.domain)}, {"order", m.n}, {"terms", terms}, {"B", B}};
}

inline PdeModel pde_of(const json& j) {
    check_format(j, kPdeFormat);
    PdeModel m;
    m.domain = j.contains("domain") ? domain_of(j.at("domain")) : Domain();
    m.n = j.at("order").get<int>();
    for (auto& t : j.at("terms")) m.terms.push_back({poly_of(t.at("coef")), t.at("exponents").get<std::vector<int>>()});
    std::vector<std::vector<Rational>> B;
    for (auto& row : j.at("B")) {
        std::vector<Rational> r;
        for (auto& x : row) r.push_back(rational_of(x));
        B.push_back(std::move(r));
    }
    m.bc = BcSpec(m.n, std::move(B));
    m.validate();
    return m;
}

inline json to_json(const PieModel& p) {
    json C = json::array();
    for (auto& c : p.C) C.push_back(tensor_json(c));
    return {{"format", kPieFormat}, {"domain", domain_json(p.domain)}, {"T", pi_json(p.T)}, {"C", C}};
}

inline PieModel pie_of(const json& j) {
    check_format(j, kPieFormat);
    PieModel p;
    p.domain = domain_of(j.at("domain"));
    p.T = pi_of(j.at("T"), p.domain);
    for (auto& c : j.at("C")) p.C.push_back(tensor_of(c, p.domain));
    for (std::size_t k = 0; k < p.C.size(); ++k)
        if (p.C[k].degree != static_cast<int>(k) + 1) throw FormatError("C entries must be listed by increasing degree");
    return p;
}

inline bool operator_equal(const TensorPiOp& x, const TensorPiOp& y) {
    if (x.degree != y.degree || !(x.domain == y.domain) || x.terms.size() != y.terms.size()) return false;
    for (std::size_t t = 0; t < x.terms.size(); ++t)
        if (x.terms[t].factors != y.terms[t].factors) return false;
    return true;
}

inline bool model_equal(const PieModel& x, const PieModel& y) {
    if (!(x.domain == y.domain) || !(x.T == y.T) || x.C.size() != y.C.size()) return false;
    for (std::size_t k = 0; k < x.C.size(); ++k)
        if (!operator_equal(x.C[k], y.C[k])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// distributed polynomials

inline json to_json(const DistPoly& p) {
    json comps = json::array();
    for (auto& c : p.components) comps.push_back({{"degree", c.degree}, {"kernel", c.kernel.to_string()}});
    return {{"format", kDistPolyFormat}, {"domain", domain_json(p.domain)}, {"constant", rational_str(p.constant)},
            {"components", comps}};
}

inline DistPoly distpoly_of(const json& j) {
    check_format(j, kDistPolyFormat);
    DistPoly p(domain_of(j.at("domain")), 0, rational_of(j.at("constant")));
    for (auto& c : j.at("components")) p.kernel(c.at("degree").get<int>()) += poly_of(c.at("kernel"));
    return p;
}

// ---------------------------------------------------------------------------
// certificates

inline json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd dense_of(const json& j) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), j.empty() ? 0 : static_cast<Eigen::Index>(j[0].size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    return m;
}

inline FeasStatus status_of(const std::string& s) {
    if (s == "feasible") return FeasStatus::Feasible;
    if (s == "infeasible") return FeasStatus::Infeasible;
    if (s == "numerical-failure") return FeasStatus::NumericalFailure;
    throw FormatError("unknown status " + s);
}

// Timings are kept out of the report so identical runs give identical bytes.
inline json to_json(const StabilityCertificate& c, bool with_gram = false) {
    json j = {{"format", kCertificateFormat},
              {"mode", c.mode},
              {"degrees",
               {{"d", c.degrees.d},
                {"dp", c.degrees.dp},
                {"dbar", c.degrees.dbar},
                {"dbar_quad", c.degrees.dbar_quad},
                {"dbar_mult", c.degrees.dbar_mult}}},
              {"r", c.r},
              {"lambda", c.lambda},
              {"eps", c.eps},
              {"C", c.C},
              {"M", c.M},
              {"status", to_string(c.status)},
              {"residuals",
               {{"primal", c.residual}, {"min_eig", c.min_eig}, {"primal_tol", c.residual_tol}, {"eig_tol", c.eig_tol}}},
              {"rows", c.rows},
              {"iterations", c.iterations},
              {"hash", c.hash}};
    if (with_gram) {
        json g = json::object();
        for (auto& [name, m] : c.gram) g[name] = matrix_json(m);
        j["gram"] = std::move(g);
    }
    return j;
}

inline json timings_json(const StabilityCertificate& c) {
    return {{"assemble_seconds", c.assemble_seconds}, {"solve_seconds", c.solve_seconds}};
}

inline StabilityCertificate certificate_of(const json& j) {
    check_format(j, kCertificateFormat);
    StabilityCertificate c;
    c.mode = j.at("mode");
    auto& d = j.at("degrees");
    c.degrees = {d.at("d"), d.at("dp"), d.at("dbar"), d.at("dbar_quad"), d.at("dbar_mult")};
    c.r = j.at("r");
    c.lambda = j.at("lambda");
    c.eps = j.at("eps");
    c.C = j.at("C");
    c.M = j.at("M");
    c.status = status_of(j.at("status"));
    auto& res = j.at("residuals");
    c.residual = res.at("primal");
    c.min_eig = res.at("min_eig");
    c.residual_tol = res.at("primal_tol");
    c.eig_tol = res.at("eig_tol");
    c.rows = j.at("rows");
    c.iterations = j.at("iterations");
    c.hash = j.at("hash");
    if (j.contains("gram"))
        for (auto& [name, m] : j.at("gram").items()) c.gram[name] = dense_of(m);
    return c;
}

// ---------------------------------------------------------------------------
// files

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

// Accepts either a PDE or a PIE document.
inline PieModel load_model(const json& j) {
    if (j.is_object() && j.value("format", "") == kPdeFormat) return compile(pde_of(j));
    return pie_of(j);
}

}  // namespace pies::io

#endif

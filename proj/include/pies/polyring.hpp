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

#ifndef PIES_POLYRING_HPP
#define PIES_POLYRING_HPP

#include <gmpxx.h>

#include <array>
#include <concepts>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pies {

using Rational = mpq_class;

// Variable universe: s, theta_1..theta_8, eta_1..eta_7.
inline constexpr int kMaxVars = 16;
inline constexpr int kMaxTheta = 8;
inline constexpr int kMaxEta = kMaxVars - 1 - kMaxTheta;

using VarId = int;

namespace var {
inline constexpr VarId s = 0;
inline VarId theta(int i) {
    if (i < 1 || i > kMaxTheta) throw std::out_of_range("theta index out of range");
    return i;
}
inline VarId eta(int i) {
    if (i < 1 || i > kMaxEta) throw std::out_of_range("eta index out of range");
    return kMaxTheta + i;
}
inline std::string name(VarId v) {
    if (v == 0) return "s";
    if (v <= kMaxTheta) return "theta_" + std::to_string(v);
    return "eta_" + std::to_string(v - kMaxTheta);
}
}  // namespace var

using Exponent = std::array<std::uint8_t, kMaxVars>;

inline int total_degree(const Exponent& e) {
    int t = 0;
    for (auto x : e) t += x;
    return t;
}

// graded lexicographic, s most significant
struct GrLex {
    bool operator()(const Exponent& a, const Exponent& b) const {
        int da = total_degree(a), db = total_degree(b);
        if (da != db) return da < db;
        return a < b;
    }
};

inline Rational rational_from_string(std::string_view txt) {
    // accepts "p", "p/q", "p.q", "p.qe-k"
    std::string t(txt);
    auto slash = t.find('/');
    if (slash != std::string::npos) {
        Rational r(rational_from_string(t.substr(0, slash)) / rational_from_string(t.substr(slash + 1)));
        r.canonicalize();
        return r;
    }
    int exp10 = 0;
    auto epos = t.find_first_of("eE");
    if (epos != std::string::npos) {
        exp10 = std::stoi(t.substr(epos + 1));
        t = t.substr(0, epos);
    }
    auto dot = t.find('.');
    if (dot != std::string::npos) {
        exp10 -= static_cast<int>(t.size() - dot - 1);
        t.erase(dot, 1);
    }
    if (t.empty() || t == "-" || t == "+") throw std::invalid_argument("bad number: " + std::string(txt));
    if (t[0] == '+') t.erase(0, 1);
    mpz_class num(t, 10);
    mpz_class p10;
    mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::abs(exp10)));
    Rational r = exp10 >= 0 ? Rational(num * p10) : Rational(num, p10);
    r.canonicalize();
    return r;
}

// Exact value of the shortest decimal representation of a double.
inline Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return rational_from_string(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)));
}

class Poly {
public:
    using TermMap = std::map<Exponent, Rational, GrLex>;

    Poly() = default;
    Poly(const Rational& c) { add_term(Exponent{}, c); }
    Poly(long c) : Poly(Rational(c)) {}
    Poly(int c) : Poly(Rational(c)) {}

    static Poly variable(VarId v, unsigned power = 1) {
        Exponent e{};
        e[v] = static_cast<std::uint8_t>(power);
        return monomial(e, 1);
    }
    static Poly monomial(const Exponent& e, const Rational& c) {
        Poly p;
        p.add_term(e, c);
        return p;
    }

    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    int degree() const {
        return terms_.empty() ? -1 : total_degree(terms_.rbegin()->first);
    }
    int degree_in(VarId v) const {
        int d = terms_.empty() ? -1 : 0;
        for (auto& [e, c] : terms_) d = std::max<int>(d, e[v]);
        return d;
    }
    bool contains(VarId v) const {
        for (auto& [e, c] : terms_)
            if (e[v]) return true;
        return false;
    }
    Rational constant_term() const {
        auto it = terms_.find(Exponent{});
        return it == terms_.end() ? Rational(0) : it->second;
    }
    bool is_constant() const {
        return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first == Exponent{});
    }

    void add_term(const Exponent& e, const Rational& c) {
        if (c == 0) return;
        auto [it, fresh] = terms_.try_emplace(e, c);
        if (fresh) {
            it->second.canonicalize();
        } else {
            it->second += c;
            it->second.canonicalize();
            if (it->second == 0) terms_.erase(it);
        }
    }

    Poly& operator+=(const Poly& q) {
        for (auto& [e, c] : q.terms_) add_term(e, c);
        return *this;
    }
    Poly& operator-=(const Poly& q) {
        for (auto& [e, c] : q.terms_) add_term(e, -c);
        return *this;
    }
    Poly& operator*=(const Rational& c) {
        if (c == 0) { terms_.clear(); return *this; }
        for (auto& [e, x] : terms_) {
            x *= c;
            x.canonicalize();
        }
        return *this;
    }
    friend Poly operator+(Poly p, const Poly& q) { return p += q; }
    friend Poly operator-(Poly p, const Poly& q) { return p -= q; }
    friend Poly operator-(Poly p) { return p *= Rational(-1); }
    friend Poly operator*(Poly p, const Rational& c) { return p *= c; }
    friend Poly operator*(const Rational& c, Poly p) { return p *= c; }
    template <std::integral I>
    friend Poly operator*(I c, Poly p) { return p *= Rational(static_cast<long>(c)); }
    template <std::integral I>
    friend Poly operator*(Poly p, I c) { return p *= Rational(static_cast<long>(c)); }
    friend Poly operator*(const Poly& p, const Poly& q) {
        Poly r;
        for (auto& [ea, ca] : p.terms_)
            for (auto& [eb, cb] : q.terms_) {
                Exponent e;
                for (int i = 0; i < kMaxVars; ++i) e[i] = static_cast<std::uint8_t>(ea[i] + eb[i]);
                r.add_term(e, ca * cb);
            }
        return r;
    }
    Poly& operator*=(const Poly& q) { return *this = *this * q; }
    friend bool operator==(const Poly& p, const Poly& q) { return p.terms_ == q.terms_; }
    friend bool operator!=(const Poly& p, const Poly& q) { return !(p == q); }

    Poly pow(unsigned k) const {
        Poly r(1), b = *this;
        while (k) {
            if (k & 1u) r *= b;
            k >>= 1u;
            if (k) b *= b;
        }
        return r;
    }

    Poly diff(VarId v) const {
        Poly r;
        for (auto& [e, c] : terms_) {
            if (!e[v]) continue;
            Exponent f = e;
            --f[v];
            r.add_term(f, c * e[v]);
        }
        return r;
    }

    // simultaneous replacement of v by expr
    Poly substitute(VarId v, const Poly& expr) const {
        std::vector<Poly> powers{Poly(1)};
        Poly r;
        for (auto& [e, c] : terms_) {
            unsigned k = e[v];
            while (powers.size() <= k) powers.push_back(powers.back() * expr);
            Exponent rest = e;
            rest[v] = 0;
            r += monomial(rest, c) * powers[k];
        }
        return r;
    }

    // renaming map: variable i becomes target[i]; targets must be distinct over the used variables
    Poly rename(const std::array<VarId, kMaxVars>& target) const {
        Poly r;
        for (auto& [e, c] : terms_) {
            Exponent f{};
            for (int i = 0; i < kMaxVars; ++i)
                if (e[i]) f[target[i]] = static_cast<std::uint8_t>(f[target[i]] + e[i]);
            r.add_term(f, c);
        }
        return r;
    }
    Poly rename(VarId from, VarId to) const {
        std::array<VarId, kMaxVars> t;
        for (int i = 0; i < kMaxVars; ++i) t[i] = i;
        t[from] = to;
        if (contains(to) && from != to) return substitute(from, variable(to));
        return rename(t);
    }

    Poly antiderivative(VarId v) const {
        Poly r;
        for (auto& [e, c] : terms_) {
            Exponent f = e;
            ++f[v];
            r.add_term(f, c / (e[v] + 1));
        }
        return r;
    }

    Poly integrate(VarId v, const Poly& lower, const Poly& upper) const {
        if (lower.contains(v) || upper.contains(v))
            throw std::invalid_argument("integration bounds contain the integration variable");
        Poly F = antiderivative(v);
        return F.substitute(v, upper) - F.substitute(v, lower);
    }

    double eval(const double* x) const {
        double acc = 0.0;
        for (auto& [e, c] : terms_) {
            double t = c.get_d();
            for (int i = 0; i < kMaxVars; ++i)
                for (int k = 0; k < e[i]; ++k) t *= x[i];
            acc += t;
        }
        return acc;
    }
    double eval(const std::map<VarId, double>& point) const {
        std::array<double, kMaxVars> x{};
        std::array<bool, kMaxVars> used{};
        for (auto& [e, c] : terms_)
            for (int i = 0; i < kMaxVars; ++i)
                if (e[i]) used[i] = true;
        for (int i = 0; i < kMaxVars; ++i) {
            if (!used[i]) continue;
            auto it = point.find(i);
            if (it == point.end()) throw std::invalid_argument("missing value for " + var::name(i));
            x[i] = it->second;
        }
        return eval(x.data());
    }
    Rational eval_exact(const std::map<VarId, Rational>& point) const {
        Rational acc = 0;
        for (auto& [e, c] : terms_) {
            Rational t = c;
            for (int i = 0; i < kMaxVars; ++i) {
                if (!e[i]) continue;
                auto it = point.find(i);
                if (it == point.end()) throw std::invalid_argument("missing value for " + var::name(i));
                for (int k = 0; k < e[i]; ++k) t *= it->second;
            }
            acc += t;
        }
        return acc;
    }

    std::string to_string() const;

private:
    TermMap terms_;
};

inline std::string Poly::to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [e, c] = *it;
        Rational a = abs(c);
        bool neg = c < 0;
        if (first) out += neg ? "-" : "";
        else out += neg ? " - " : " + ";
        first = false;
        std::string mono;
        for (int i = 0; i < kMaxVars; ++i) {
            if (!e[i]) continue;
            if (!mono.empty()) mono += "*";
            mono += var::name(i);
            if (e[i] > 1) mono += "^" + std::to_string(e[i]);
        }
        if (mono.empty()) out += a.get_str();
        else if (a == 1) out += mono;
        else out += a.get_str() + "*" + mono;
    }
    return out;
}

inline std::ostream& operator<<(std::ostream& os, const Poly& p) { return os << p.to_string(); }

namespace detail {

class PolyParser {
public:
    explicit PolyParser(std::string_view src) : s_(src) {}
    Poly parse() {
        Poly p = expr();
        skip();
        if (pos_ != s_.size()) fail("trailing input");
        return p;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("polynomial parse error at " + std::to_string(pos_) + ": " + what + " in '" +
                                    std::string(s_) + "'");
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    Poly expr() {
        Poly p = term();
        for (;;) {
            if (eat('+')) p += term();
            else if (eat('-')) p -= term();
            else return p;
        }
    }
    Poly term() {
        Poly p = unary();
        for (;;) {
            if (eat('*')) p *= unary();
            else if (eat('/')) {
                Poly d = unary();
                if (!d.is_constant() || d.is_zero()) fail("division by a non-constant or zero");
                p *= Rational(1) / d.constant_term();
            } else return p;
        }
    }
    Poly unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return power();
    }
    Poly power() {
        Poly b = atom();
        if (eat('^')) {
            skip();
            std::size_t st = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            if (st == pos_) fail("expected exponent");
            b = b.pow(static_cast<unsigned>(std::stoul(std::string(s_.substr(st, pos_ - st)))));
        }
        return b;
    }
    Poly atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Poly p = expr();
            if (!eat(')')) fail("expected ')'");
            return p;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t st = pos_;
            while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
                std::size_t save = pos_++;
                if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
                if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
                } else {
                    pos_ = save;
                }
            }
            return Poly(rational_from_string(s_.substr(st, pos_ - st)));
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t st = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            return Poly::variable(lookup(s_.substr(st, pos_ - st)));
        }
        fail(std::string("unexpected character '") + c + "'");
    }
    VarId lookup(std::string_view name) const {
        if (name == "s") return var::s;
        auto indexed = [&](std::string_view stem, int& idx) {
            if (name == stem) { idx = 1; return true; }
            if (name.size() > stem.size() + 1 && name.substr(0, stem.size()) == stem && name[stem.size()] == '_') {
                idx = std::stoi(std::string(name.substr(stem.size() + 1)));
                return true;
            }
            return false;
        };
        int idx = 0;
        if (indexed("theta", idx)) return var::theta(idx);
        if (indexed("eta", idx)) return var::eta(idx);
        fail("unknown variable '" + std::string(name) + "'");
    }
};

}  // namespace detail

inline Poly parse_poly(std::string_view text) { return detail::PolyParser(text).parse(); }

inline Poly operator""_p(const char* txt, std::size_t n) { return parse_poly(std::string_view(txt, n)); }

}  // namespace pies

#endif

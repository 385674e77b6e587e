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

#ifndef PIES_QUADRATURE_HPP
#define PIES_QUADRATURE_HPP

#include <boost/math/quadrature/gauss.hpp>

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pies {

using Func = std::function<double(double)>;

struct Rule {
    std::vector<double> x, w;
};

template <int N>
Rule gauss_legendre_ref() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    Rule r;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            r.x.push_back(0.0);
            r.w.push_back(w[i]);
        } else {
            r.x.push_back(-a[i]);
            r.w.push_back(w[i]);
            r.x.push_back(a[i]);
            r.w.push_back(w[i]);
        }
    }
    return r;
}

// Gauss-Legendre rule on [-1,1]; supported sizes are the ones used by the library.
inline const Rule& gauss_legendre(int n) {
    static const Rule r8 = gauss_legendre_ref<8>();
    static const Rule r16 = gauss_legendre_ref<16>();
    static const Rule r24 = gauss_legendre_ref<24>();
    static const Rule r32 = gauss_legendre_ref<32>();
    switch (n) {
        case 8: return r8;
        case 16: return r16;
        case 24: return r24;
        case 32: return r32;
        default: throw std::invalid_argument("unsupported Gauss-Legendre order");
    }
}

inline Rule gauss_on(double lo, double hi, int n = 32) {
    const Rule& ref = gauss_legendre(n);
    Rule r;
    double h = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
    r.x.reserve(ref.x.size());
    r.w.reserve(ref.x.size());
    for (std::size_t i = 0; i < ref.x.size(); ++i) {
        r.x.push_back(m + h * ref.x[i]);
        r.w.push_back(h * ref.w[i]);
    }
    return r;
}

inline double integrate(const Func& f, double lo, double hi, int n = 32) {
    Rule r = gauss_on(lo, hi, n);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * f(r.x[i]);
    return acc;
}

// Iterated rule over the ordered simplex a <= t1 <= ... <= td <= b.
// f receives a pointer to d coordinates.
inline double integrate_simplex(const std::function<double(const double*)>& f, int d, double a, double b,
                                int n = 24) {
    std::vector<double> pt(static_cast<std::size_t>(d));
    std::function<double(int, double)> rec = [&](int k, double upper) -> double {
        // integrate coordinate k over [a, upper]
        Rule r = gauss_on(a, upper, n);
        double acc = 0.0;
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            pt[static_cast<std::size_t>(k)] = r.x[i];
            acc += r.w[i] * (k == 0 ? f(pt.data()) : rec(k - 1, r.x[i]));
        }
        return acc;
    };
    if (d == 0) return f(pt.data());
    return rec(d - 1, b);
}

}  // namespace pies

#endif

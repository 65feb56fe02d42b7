#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include "hgm/error.hpp"

namespace hgm {

// Element of PSL(2,R): a unit-determinant 2x2 matrix modulo sign. The stored
// representative always has trace >= 0 (ties broken on the first nonzero
// entry in row-major order).
template <class Real = double>
class Moebius {
public:
    Real a{1}, b{0}, c{0}, d{1};

    constexpr Moebius() = default;

    static Moebius identity() { return Moebius{}; }

    // Builds from raw entries; renormalizes and canonicalizes the sign.
    static Moebius from(Real a, Real b, Real c, Real d) {
        Moebius m;
        m.a = a; m.b = b; m.c = c; m.d = d;
        m.normalize();
        return m;
    }

    template <class Other>
    Moebius<Other> cast() const {
        return Moebius<Other>::from(Other(a), Other(b), Other(c), Other(d));
    }

    Real det() const { return a * d - b * c; }
    Real trace() const { return a + d; }
    Real frob2() const { return a * a + b * b + c * c + d * d; }
    Real frob() const { return std::sqrt(frob2()); }

    Moebius inverse() const {
        Moebius m;
        m.a = d; m.b = -b; m.c = -c; m.d = a;
        m.canonicalize_sign();
        return m;
    }

    friend Moebius operator*(const Moebius& x, const Moebius& y) {
        Moebius m;
        m.a = x.a * y.a + x.b * y.c;
        m.b = x.a * y.b + x.b * y.d;
        m.c = x.c * y.a + x.d * y.c;
        m.d = x.c * y.b + x.d * y.d;
        m.normalize();
        return m;
    }
    Moebius& operator*=(const Moebius& y) { return *this = *this * y; }

    // Action on the upper half plane, z = (x, y) with y > 0.
    std::pair<Real, Real> act(Real x, Real y) const {
        // (a z + b) / (c z + d)
        Real nr = a * x + b, ni = a * y;
        Real dr = c * x + d, di = c * y;
        Real den = dr * dr + di * di;
        return {(nr * dr + ni * di) / den, (ni * dr - nr * di) / den};
    }
    // Image of i.
    std::pair<Real, Real> act_i() const {
        Real den = c * c + d * d;
        return {(a * c + b * d) / den, Real(1) / den};
    }

    std::array<Real, 4> entries() const { return {a, b, c, d}; }

    // Largest entrywise deviation modulo sign.
    Real max_abs_diff(const Moebius& o) const {
        using std::abs;
        using std::max;
        Real p = max(max(abs(a - o.a), abs(b - o.b)), max(abs(c - o.c), abs(d - o.d)));
        Real n = max(max(abs(a + o.a), abs(b + o.b)), max(abs(c + o.c), abs(d + o.d)));
        return p < n ? p : n;
    }

    void normalize() {
        Real ad = a * d, bc = b * c;
        Real dt = ad - bc;
        // for large entries the computed determinant is rounding noise, and
        // rescaling by it would inject that noise into every entry
        Real noise = 4 * std::numeric_limits<Real>::epsilon() * (std::abs(ad) + std::abs(bc));
        if (noise < Real(1e-12) && std::abs(dt - Real(1)) > Real(1e-14)) {
            if (!(dt > 0)) fail(ErrorKind::DegenerateDecomposition, "non-positive determinant");
            Real k = Real(1) / std::sqrt(dt);
            a *= k; b *= k; c *= k; d *= k;
        }
        canonicalize_sign();
    }

    void canonicalize_sign() {
        Real tr = a + d;
        bool flip = false;
        if (tr < 0) {
            flip = true;
        } else if (tr == 0) {
            if (a != 0) flip = a < 0;
            else if (b != 0) flip = b < 0;
            else if (c != 0) flip = c < 0;
            else flip = d < 0;
        }
        if (flip) { a = -a; b = -b; c = -c; d = -d; }
    }
};

using Moebiusd = Moebius<double>;

enum class ParamKind { A, B, C, D };

template <class Real = double>
Moebius<Real> one_param(ParamKind kind, Real p) {
    using std::cos;
    using std::exp;
    using std::sin;
    switch (kind) {
    case ParamKind::A: return Moebius<Real>::from(exp(p / 2), 0, 0, exp(-p / 2));
    case ParamKind::B: return Moebius<Real>::from(1, p, 0, 1);
    case ParamKind::C: return Moebius<Real>::from(1, 0, p, 1);
    case ParamKind::D: return Moebius<Real>::from(cos(p / 2), -sin(p / 2), sin(p / 2), cos(p / 2));
    }
    return Moebius<Real>{};
}

template <class Real = double> Moebius<Real> a_(Real t) { return one_param<Real>(ParamKind::A, t); }
template <class Real = double> Moebius<Real> b_(Real s) { return one_param<Real>(ParamKind::B, s); }
template <class Real = double> Moebius<Real> c_(Real u) { return one_param<Real>(ParamKind::C, u); }
template <class Real = double> Moebius<Real> d_(Real th) { return one_param<Real>(ParamKind::D, th); }

// d_pi with exact entries.
template <class Real = double>
Moebius<Real> d_pi() { return Moebius<Real>::from(0, -1, 1, 0); }

enum class ElementClass { identity, elliptic, parabolic, hyperbolic };

inline const char* to_string(ElementClass e) {
    switch (e) {
    case ElementClass::identity: return "identity";
    case ElementClass::elliptic: return "elliptic";
    case ElementClass::parabolic: return "parabolic";
    case ElementClass::hyperbolic: return "hyperbolic";
    }
    return "?";
}

template <class Real>
struct CubDecomposition {
    Real u{0}, s{0}, t{0};
};

// g = c_u b_s a_t
template <class Real>
CubDecomposition<Real> decompose_cub(const Moebius<Real>& g) {
    using std::abs;
    if (abs(g.a) <= Real(1e-12)) fail(ErrorKind::DegenerateDecomposition, "|a| <= 1e-12");
    Real a = g.a, b = g.b, c = g.c;
    if (a < 0) { a = -a; b = -b; c = -c; }
    CubDecomposition<Real> r;
    r.t = 2 * std::log(a);
    r.s = a * b;
    r.u = c / a;
    return r;
}

// g = b_s c_u a_t
template <class Real>
CubDecomposition<Real> decompose_bcu(const Moebius<Real>& g) {
    using std::abs;
    if (abs(g.d) <= Real(1e-12)) fail(ErrorKind::DegenerateDecomposition, "|d| <= 1e-12");
    Real b = g.b, c = g.c, d = g.d;
    if (d < 0) { b = -b; c = -c; d = -d; }
    CubDecomposition<Real> r;
    r.t = -2 * std::log(d);
    r.s = b / d;
    r.u = c * d;
    return r;
}

template <class Real>
Moebius<Real> compose_cub(Real u, Real s, Real t) { return c_(u) * b_(s) * a_(t); }
template <class Real>
Moebius<Real> compose_bcu(Real s, Real u, Real t) { return b_(s) * c_(u) * a_(t); }

// Principal log X of the trace-positive representative, returned as its
// Frobenius norm.
template <class Real>
Real log_norm(const Moebius<Real>& m) {
    using std::abs;
    using std::sqrt;
    Real tau = m.trace() / 2; // >= 0 by canonicalization
    Real x = tau - 1;
    Real f;
    if (abs(x) < Real(1e-6)) {
        // theta/sinh(theta) with cosh(theta) = 1 + x, series in x
        f = 1 - x / 3 + 2 * x * x / 15;
    } else if (x > 0) {
        Real th = std::acosh(tau);
        f = th / std::sinh(th);
    } else {
        if (tau <= Real(-1) + Real(1e-12)) fail(ErrorKind::LogUndefined, "trace <= -2");
        Real th = std::acos(tau);
        f = th / std::sin(th);
    }
    Real p = m.a - tau, q = m.d - tau;
    return abs(f) * sqrt(p * p + q * q + m.b * m.b + m.c * m.c);
}

template <class Real>
Real group_distance(const Moebius<Real>& g, const Moebius<Real>& h) {
    return log_norm(g.inverse() * h);
}

template <class Real>
ElementClass classify(const Moebius<Real>& g) {
    if (log_norm(g) <= Real(1e-10)) return ElementClass::identity;
    Real tr = g.trace();
    if (std::abs(tr - 2) <= Real(1e-10)) return ElementClass::parabolic;
    return tr < 2 ? ElementClass::elliptic : ElementClass::hyperbolic;
}

template <class Real>
Real translation_length(Real trace) {
    return 2 * std::acosh(trace / 2);
}

template <class Real>
struct AxisNormalForm {
    Moebius<Real> p;
    Real T{0};
};

// g = p a_T p^{-1}, expanding eigenvector in the first column of p.
template <class Real>
AxisNormalForm<Real> axis_normal_form(const Moebius<Real>& g) {
    using std::abs;
    using std::sqrt;
    Real tr = g.trace();
    if (!(tr >= 2 + Real(1e-8))) fail(ErrorKind::NotHyperbolic, "trace < 2 + 1e-8");
    Real T = translation_length(tr);
    Real lam = std::exp(T / 2), mu = std::exp(-T / 2);
    auto eig = [&](Real ev) {
        // two candidate kernel vectors of (g - ev I); keep the larger one
        Real v1 = g.b, v2 = ev - g.a;
        Real w1 = ev - g.d, w2 = g.c;
        if (v1 * v1 + v2 * v2 >= w1 * w1 + w2 * w2) return std::pair<Real, Real>{v1, v2};
        return std::pair<Real, Real>{w1, w2};
    };
    auto [v1, v2] = eig(lam);
    auto [w1, w2] = eig(mu);
    Real nv = sqrt(v1 * v1 + v2 * v2), nw = sqrt(w1 * w1 + w2 * w2);
    v1 /= nv; v2 /= nv; w1 /= nw; w2 /= nw;
    Real dt = v1 * w2 - v2 * w1;
    if (dt < 0) { w1 = -w1; w2 = -w2; dt = -dt; }
    Real k = Real(1) / sqrt(dt);
    v1 *= k; v2 *= k; w1 *= k; w2 *= k;
    if (v1 < 0 || (v1 == 0 && v2 < 0)) { v1 = -v1; v2 = -v2; w1 = -w1; w2 = -w2; }
    Moebius<Real> p;
    p.a = v1; p.b = w1; p.c = v2; p.d = w2;
    // keep the first-column sign convention instead of trace canonicalization
    Real dd = p.det();
    if (abs(dd - 1) > Real(1e-14)) {
        Real s = Real(1) / sqrt(dd);
        p.a *= s; p.b *= s; p.c *= s; p.d *= s;
    }
    return {p, T};
}

} // namespace hgm

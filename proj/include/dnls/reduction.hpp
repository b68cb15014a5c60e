#pragma once

// Admissible carriers and integer scales, and the closed-form coefficients of
// the reduced discrete NLS equations
//   phi_{m+1} - phi + c1 d2(phi) + c2 d1(phi) + cubic |phi|^2 phi + c_psi0 psi0 phi = 0
// with d2, d1 the second differences of step two and one.

#include "core.hpp"
#include "models.hpp"

#include <boost/integer/common_factor.hpp>

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dnls {

inline std::optional<Rational> exact_sqrt(const Rational& r) {
    if (r < 0) return std::nullopt;
    BigInt n = boost::multiprecision::numerator(r), d = boost::multiprecision::denominator(r);
    BigInt sn = boost::multiprecision::sqrt(n), sd = boost::multiprecision::sqrt(d);
    if (sn * sn != n || sd * sd != d) return std::nullopt;
    return Rational(sn, sd);
}

// Carrier wavenumber given by a rational cos k and the sign of sin k.
struct Wavenumber {
    Rational cos_k = 0;
    int sin_sign = 1;

    void check() const {
        if (cos_k > 1 || cos_k < -1) throw DomainError("|cos k| > 1");
    }
    double k() const {
        check();
        const double a = std::acos(to_double(cos_k));
        return sin_sign >= 0 ? a : -a;
    }
    double sin() const { return std::sin(k()); }
    std::optional<Rational> sin_exact() const {
        check();
        auto s = exact_sqrt(1 - cos_k * cos_k);
        if (s && sin_sign < 0) *s = -*s;
        return s;
    }
};

struct PQPair {
    Rational P, Q;
};

inline PQPair pq_of(const LatticeModel& m) {
    switch (m.kind()) {
        case ModelKind::mkdv: return {m.p() - m.q(), m.p() + m.q()};
        case ModelKind::hietarinta:
            if (!m.reality_holds()) throw DomainError("hietarinta parameters violate the reality condition");
            return {m.o1() * (m.e1() - m.e2()), m.e1() * (m.o1() - m.e2())};
        case ModelKind::vkvm: return {m.alpha(), 1 - m.alpha()};
        case ModelKind::nikdv: break;
    }
    throw DomainError("nikdv is not of PQ form");
}

inline bool pq_degenerate(const PQPair& pq) { return pq.P * pq.P == pq.Q * pq.Q; }

struct Interval {
    Rational lo, hi;
};

// Allowed range of M2/M1 for a given P/Q.
inline Interval allowed_region(const Rational& r) {
    if (r == 1 || r == -1) throw DomainError("degenerate ratio P/Q = +-1 (P^2 = Q^2)");
    if (r == 0) throw DomainError("degenerate ratio P/Q = 0: the interval collapses to [-1, -1]");
    Rational a = (r - 1) / (r + 1), b = (r + 1) / (r - 1);
    if (a > b) std::swap(a, b);
    return {a, b};
}

struct ScaleTriple {
    long long N = 0;
    long long M1 = 0, M2 = 0;
    cd S{0, 0};
    double rho = 0, theta = 0;
    int branch = 0;
    bool degenerate = false;         // P^2 = Q^2: group velocity 0, M2 = 0 and M1 free
    Rational group_velocity = 0;     // M2/M1

    bool divides() const { return N > 0 && M1 != 0 && M2 != 0 && N % M1 == 0 && N % M2 == 0; }
};

// S = M1/(P - Q z), since Omega (P z - Q) = P - Q z.
template <class R>
Cx<R> scale_constant(const PQPair& pq, const Cx<R>& z, long long M1) {
    return Cx<R>(R(M1)) / (Cx<R>(as_value<R>(pq.P)) - Cx<R>(as_value<R>(pq.Q)) * z);
}

// For a degenerate pair the integer argument is taken as M1 and M2 = 0.
inline ScaleTriple solve_scales(const LatticeModel& model, const Wavenumber& w, long long M2, int branch = 0) {
    w.check();
    const PQPair pq = pq_of(model);
    ScaleTriple st;
    st.branch = branch;
    const Rational c = w.cos_k;
    const Rational D = pq.P * pq.P + pq.Q * pq.Q - 2 * pq.P * pq.Q * c;
    if (pq_degenerate(pq)) {
        if (M2 == 0) throw DomainError("degenerate carrier needs a nonzero M1");
        st.degenerate = true;
        st.M1 = M2;
        st.M2 = 0;
    } else {
        if (M2 == 0) throw DomainError("M2 must be nonzero");
        const Rational m1 = Rational(M2) * D / (pq.P * pq.P - pq.Q * pq.Q);
        if (!is_integer(m1)) {
            const Rational deficit = m1 - Rational(boost::multiprecision::numerator(m1) / boost::multiprecision::denominator(m1));
            throw DomainError("inadmissible wavenumber: M1 = " + to_string(m1) + " is not an integer (fractional part " +
                              to_string(deficit) + ")");
        }
        if (m1 == 0) throw DomainError("inadmissible wavenumber: M1 = 0");
        st.M1 = boost::multiprecision::numerator(m1).convert_to<long long>();
        st.M2 = M2;
    }
    if (branch % 2 != 0) {
        st.M1 = -st.M1;
        st.M2 = -st.M2;
    }
    st.group_velocity = Rational(st.M2) / Rational(st.M1);
    const double k = w.k();
    const cd z = std::polar(1.0, k);
    st.S = scale_constant<double>(pq, Cx<double>(z.real(), z.imag()), st.M1).to_cd();
    st.rho = std::abs(st.S);
    st.theta = std::arg(st.S);

    // Consistency with the modulus and phase conditions.
    const double P = to_double(pq.P), Q = to_double(pq.Q);
    const double rootD = std::sqrt(to_double(D));
    if (std::abs(st.rho * rootD - std::abs(double(st.M1))) > 1e-9 * std::max(1.0, std::abs(double(st.M1))))
        throw NumericalError("scale modulus inconsistent with |M1|");
    const double x = Q * std::cos(k) - P, y = Q * std::sin(k);
    const double theta0 = x == 0 ? (y > 0 ? -std::numbers::pi / 2 : std::numbers::pi / 2) : -std::atan(y / x);
    const double t = std::remainder(st.theta - theta0, std::numbers::pi);
    if (std::abs(t) > 1e-9) throw NumericalError("scale phase inconsistent with the reality condition");
    const cd W = (P - Q * z) / (P * z - Q);
    const cd m1 = st.S * W * (P * z - Q), m2 = st.S * z * (P * W + Q);
    const double tol = 1e-12 * std::max(1.0, std::abs(m1) + std::abs(m2));
    if (std::abs(m1.imag()) > tol || std::abs(m2.imag()) > tol || std::abs(m1.real() - double(st.M1)) > 1e-9 ||
        std::abs(m2.real() - double(st.M2)) > 1e-9)
        throw NumericalError("constructed S does not give the integer scales");
    return st;
}

struct AdmissibleEntry {
    Rational cos_k;
    long long M1 = 0, M2 = 0;
    bool degenerate = false;
};

// Rational cos k = r/s with s <= denom_max and integer M1 for 0 < |M2| <= M2_max.
inline std::vector<AdmissibleEntry> enumerate_admissible(const LatticeModel& model, long long M2_max, long long denom_max) {
    const PQPair pq = pq_of(model);
    std::vector<AdmissibleEntry> out;
    if (M2_max <= 0 || denom_max <= 0) return out;
    std::set<Rational> cosines;
    for (long long s = 1; s <= denom_max; ++s)
        for (long long r = -s; r <= s; ++r) cosines.insert(make_rational(r, s));
    const bool degen = pq_degenerate(pq);
    for (const auto& c : cosines) {
        Wavenumber w{c, 1};
        if (degen) {
            if (c == 1) continue;  // k = 0: P - Q z vanishes and S is undefined
            for (long long m1 = 1; m1 <= M2_max; ++m1) {
                ScaleTriple st = solve_scales(model, w, m1);
                out.push_back({c, st.M1, st.M2, true});
            }
            continue;
        }
        for (long long m2 = -M2_max; m2 <= M2_max; ++m2) {
            if (m2 == 0) continue;
            try {
                ScaleTriple st = solve_scales(model, w, m2);
                out.push_back({c, st.M1, st.M2, false});
            } catch (const DomainError&) {
            }
        }
    }
    return out;
}

enum class FormVariant { corrected, printed };

template <class R>
struct CoefficientSet {
    Cx<R> c1, c2, cubic, c_psi0, p1, p2;
    bool nonlocal = false;
    std::vector<std::pair<std::string, Cx<R>>> raw;

    const Cx<R>& get(const std::string& name) const {
        for (const auto& kv : raw)
            if (kv.first == name) return kv.second;
        throw DomainError("no coefficient named " + name);
    }
    bool has(const std::string& name) const {
        for (const auto& kv : raw)
            if (kv.first == name) return true;
        return false;
    }

    template <class T>
    CoefficientSet<T> convert() const {
        auto cv = [](const Cx<R>& v) { return Cx<T>(T(to_double(v.re)), T(to_double(v.im))); };
        CoefficientSet<T> o;
        o.c1 = cv(c1);
        o.c2 = cv(c2);
        o.cubic = cv(cubic);
        o.c_psi0 = cv(c_psi0);
        o.p1 = cv(p1);
        o.p2 = cv(p2);
        o.nonlocal = nonlocal;
        for (const auto& [n, v] : raw) o.raw.push_back({n, cv(v)});
        return o;
    }
};

// Evaluation point of the closed forms.
template <class R>
struct CarrierPoint {
    Cx<R> z;
    R c, s;
    Cx<R> S;
    R M1, M2;
    bool degenerate = false;
};

template <class R>
CoefficientSet<R> mkdv_coefficients(const R& p, const R& q, const CarrierPoint<R>& x, FormVariant v) {
    using C = Cx<R>;
    const C I = C::i(), z = x.z, S = x.S;
    const R c = x.c, s = x.s, M2 = x.M2;
    CoefficientSet<R> o;
    const R D = p * p + q * q - (p * p - q * q) * c;
    const R k3 = v == FormVariant::corrected ? R(4) : R(2);
    o.c1 = C(-M2 * M2 * (p - q) / (16 * p * q)) * (C(p + q) * C(c, s) - C(p - q));
    o.c2 = C(M2 * M2 * (p - q) / (4 * p * q) * ((p + q) * c - (p - q)));
    const C c3 = I * C(k3 * p * q * (p * p - q * q) * s * s * s / (D * D));
    o.p1 = C(R(1) / R(2));
    o.p2 = C(R(0));
    o.cubic = c3 * o.p1;
    o.c_psi0 = C(R(0));
    const C a = C(p - q) * z - C(p + q), b = C(p + q) * z - C(p - q);
    const C one(R(1));
    o.raw = {
        {"c3", c3},
        {"z.c1", C(p * q * (p - q)) * S * S * z * z * (C(p - q) - C(p + q) * z) / (a * a)},
        {"z.c2", C(2 * p * q * (p - q)) * S * S * z * (C(p + q) * (one + z * z) - C(2 * (p - q)) * z) / (a * a)},
        {"z.c3", C(2 * p * q * (p * p - q * q)) * ipow(one - z * z, 3) / (z * a * a * b * b)},
        {"continuum.closed", C(-M2 * M2 * (p * p - q * q) * s / (4 * p * q))},
    };
    return o;
}

template <class R>
struct HietarintaParts {
    R P1, P2, Q[6], Rr[4];
};

template <class R>
HietarintaParts<R> hietarinta_parts(const R& e1, const R& e2, const R& o1, FormVariant v) {
    HietarintaParts<R> h;
    const R P1 = e1 * (e2 - o1), P2 = o1 * (e1 - e2);
    h.P1 = P1;
    h.P2 = P2;
    const R P13 = P1 * P1 * P1, P23 = P2 * P2 * P2, P12 = P1 * P1, P22 = P2 * P2;
    h.Q[0] = P1 * P2 * (P1 * e1 + P2 * e2);
    h.Q[1] = P13 * (e1 - e2) + P23 * (e2 - o1) + P1 * P2 * (P2 * e1 + 2 * P1 * e2 - P1 * o1);
    h.Q[2] = -P1 * (P12 * (e1 - e2) + P22 * (e1 + 4 * o1 - 3 * e2) + P1 * P2 * (3 * e2 - e1));
    h.Q[3] = -P2 * (P12 * (4 * e1 - 3 * e2 + o1) + P22 * (o1 - e2) + P1 * P2 * (3 * e2 - o1));
    if (v == FormVariant::corrected)
        h.Q[4] = -P13 * (e1 - e2) - P23 * (e2 - o1) - P1 * P2 * (P2 * e1 - 2 * P2 * e2 - P1 * o1);
    else
        h.Q[4] = -P13 * (e1 - e2) - P23 * (e2 - o1) - P1 * P2 * (P2 * e1 - 2 * P1 * e2 - P1 * o1);
    h.Q[5] = P1 * P2 * (P1 * e2 + P2 * o1);
    const R g = e2 * e2 - e1 * e2;
    h.Rr[0] = P2 * (P12 + P22 + P1 * P2 + P2 * g);
    h.Rr[1] = P23 + g * (P22 - P12) + P1 * P2 * (g + P1 + 3 * P2);
    if (v == FormVariant::corrected)
        h.Rr[2] = -P23 - g * (P22 - P12) - P1 * P2 * (-g + P1 + P2);
    else
        h.Rr[2] = -P23 - g * (P22 - P12) - P1 * P2 * (g + P1 + P2);
    h.Rr[3] = P1 * (P1 * e2 * e2 - P22 - P1 * e1 * e2);
    return h;
}

template <class R>
CoefficientSet<R> hietarinta_coefficients(const R& e1, const R& e2, const R& o1, const CarrierPoint<R>& x,
                                          FormVariant v) {
    using C = Cx<R>;
    const C I = C::i(), z = x.z, S = x.S, one(R(1));
    const R c = x.c, s = x.s, M2 = x.M2;
    if (e1 == R(0) || e2 == R(0) || o1 == R(0)) throw DomainError("hietarinta closed forms need e1, e2, o1 nonzero");
    const auto h = hietarinta_parts(e1, e2, o1, v);
    const R P1 = h.P1, P2 = h.P2;
    const C A = C(P1) + C(P2) * z, B = C(P1) * z + C(P2), zm = z - one;
    CoefficientSet<R> o;
    o.c1 = S * S * z * z * C(P2 * (P1 * P1 - P2 * P2)) * B / (C(R(4)) * A * A);
    o.c2 = -S * S * z * C(P2 * (P1 * P1 - P2 * P2)) * (C(P1) * (one + z * z) + C(2 * P2) * z) / (C(R(2)) * A * A);
    C qpoly(R(0));
    for (int i = 0; i < 6; ++i) qpoly = qpoly * z + C(h.Q[i]);
    const C c3 = zm * C(P1 - P2) * qpoly / (C(e2 * (P1 - e1 * e2)) * A * A * B * B * z);
    const C c4 = zm * zm * C((P1 - P2) * (e2 * e2 - e1 * e2 + P2)) / (C(e2) * (C(P2) * z + C(P1)) * B);
    const C rpoly = ((C(h.Rr[0]) * z + C(h.Rr[1])) * z * z + C(h.Rr[2])) * z + C(h.Rr[3]);
    const C c5 = zm * zm * C(P1 - P2) * rpoly / (C(e2) * A * A * B * B * z);
    o.p1 = (C(e1) * z - C(o1)) / (C(e1 * o1) * zm);
    o.p2 = C((e1 + o1) / (e1 * o1));
    o.cubic = c3 + c5 * o.p1;
    o.c_psi0 = c4;
    o.nonlocal = true;
    o.raw = {{"c3", c3}, {"c4", c4}, {"c5", c5}};
    const char* qn[6] = {"Q1", "Q2", "Q3", "Q4", "Q5", "Q6"};
    for (int i = 0; i < 6; ++i) o.raw.push_back({qn[i], C(h.Q[i])});
    const char* rn[4] = {"R1", "R2", "R3", "R4"};
    for (int i = 0; i < 4; ++i) o.raw.push_back({rn[i], C(h.Rr[i])});
    const R den = P1 * P1 + P2 * P2 + 2 * P1 * P2 * c;
    if (!x.degenerate && den != R(0) && o1 * e2 + P2 != R(0)) {
        o.raw.push_back({"trig.c1", C(-P2 * M2 * M2 / (4 * (P2 * P2 - P1 * P1))) * (C(P1) * C(c, s) + C(P2))});
        o.raw.push_back({"trig.c2", C(P2 * (P1 * c + P2) * M2 * M2 / (P2 * P2 - P1 * P1))});
        o.raw.push_back({"trig.c3hat", C(2 * (P1 - P2) * (P1 * (e1 - e2) + P2 * (e2 - o1)) * (c - 1) /
                                         (e2 * (o1 * e2 + P2) * den))});
        o.raw.push_back({"trig.c4", C(-2 * (P1 - P2) * (P1 - e2 * e2 + o1 * e2) * (c - 1) / (e2 * den))});
    }
    (void)I;
    return o;
}

template <class R>
CoefficientSet<R> vkvm_coefficients(const R& a, const CarrierPoint<R>& x, FormVariant v) {
    using C = Cx<R>;
    const C I = C::i(), z = x.z, S = x.S, one(R(1));
    const R c = x.c, s = x.s, M2 = x.M2;
    const C A = C(a) * (z + one) - one, B = C(a) * (z + one) - z, zm = z - one;
    CoefficientSet<R> o;
    o.c1 = C(a) * S * S * z * z * C(1 - 2 * a) * B / (C(R(4)) * A * A);
    o.c2 = C(a) * S * S * z * C(2 * a - 1) * (C(a) * (z + one) * (z + one) - z * z - one) / (C(R(2)) * A * A);
    const C c3 = C(a) * (one - z * z) / (B * A);
    const C c4 = C(a) * (one - z * z) * (z * z - z + one) / (B * A * z);
    if (v == FormVariant::corrected) {
        o.p1 = C(1 - 2 * a) * z / (C(a - 1) * zm * zm);
        o.p2 = C(2 * a - 1) * (z * z + one) / (C(a - 1) * zm * zm);
    } else {
        o.p1 = C(1 - 2 * a) * z / (C(a) * (z + one) * (z + one) - z * z - one);
        o.p2 = (C(2 * a) * (one + z * z) - z * z - one) / ((one - z * z) * C(a - 1));
    }
    o.cubic = c4 * o.p1;
    o.c_psi0 = c3;
    o.nonlocal = true;
    o.raw = {{"c3", c3}, {"c4", c4}};
    if (!x.degenerate) {
        const R G = 2 * a * (a - 1) * (c + 1) + 1;
        if (G == R(0)) throw DomainError("vkvm trigonometric forms are singular at this carrier");
        o.raw.push_back({"trig.c1", C(-a * M2 * M2 / (4 * (2 * a - 1))) * (C(a - 1) * C(c, s) + C(a))});
        o.raw.push_back({"trig.c2", C(a * ((a - 1) * c + a) * M2 * M2 / (2 * a - 1))});
        o.raw.push_back({"trig.c3", I * C(-2 * a * s / G)});
        const R f = v == FormVariant::corrected ? a * (2 * a - 1) : R(1);
        o.raw.push_back({"trig.c4hat", I * C(f * (2 * c - 1) * s / ((a - 1) * (c - 1) * G))});
    }
    return o;
}

struct ReducedEquation {
    ModelKind kind = ModelKind::mkdv;
    Wavenumber wave;
    double k = 0;
    ScaleTriple scales;
    double M1 = 0, M2 = 0;  // as used in the coefficients (real, possibly non-integer for nikdv)
    CoefficientSet<double> coef;
    std::optional<CoefficientSet<Rational>> exact;

    cd c1() const { return coef.c1.to_cd(); }
    cd c2() const { return coef.c2.to_cd(); }
    cd cubic() const { return coef.cubic.to_cd(); }
    cd c_psi0() const { return coef.c_psi0.to_cd(); }
    cd p1() const { return coef.p1.to_cd(); }
    cd p2() const { return coef.p2.to_cd(); }
    // NLS presentation: i(phi_{m+1} - phi) = C1 d2 + C2 d1 + C3 |phi|^2 phi
    cd C1() const { return cd(0, -1) * c1(); }
    cd C2() const { return cd(0, -1) * c2(); }
    cd C3() const { return cd(0, -1) * cubic(); }
    cd continuum() const { return 4.0 * C1() + C2(); }
};

template <class R>
CarrierPoint<R> carrier_point(const PQPair& pq, const Rational& cosk, const R& sink, const ScaleTriple& st) {
    CarrierPoint<R> x;
    x.c = as_value<R>(cosk);
    x.s = sink;
    x.z = Cx<R>(x.c, x.s);
    x.M1 = R(st.M1);
    x.M2 = R(st.M2);
    x.S = scale_constant<R>(pq, x.z, st.M1);
    x.degenerate = st.degenerate;
    return x;
}

template <class R>
CoefficientSet<R> closed_form_coefficients(const LatticeModel& m, const CarrierPoint<R>& x, FormVariant v) {
    switch (m.kind()) {
        case ModelKind::mkdv: return mkdv_coefficients<R>(as_value<R>(m.p()), as_value<R>(m.q()), x, v);
        case ModelKind::hietarinta:
            return hietarinta_coefficients<R>(as_value<R>(m.e1()), as_value<R>(m.e2()), as_value<R>(m.o1()), x, v);
        case ModelKind::vkvm: return vkvm_coefficients<R>(as_value<R>(m.alpha()), x, v);
        case ModelKind::nikdv: break;
    }
    throw DomainError("nikdv has no closed-form coefficients; use the expansion engine");
}

// Closed-form reduction of a PQ model at an admissible carrier. Evaluated in
// exact Gaussian-rational arithmetic when sin k is rational.
inline ReducedEquation reduce_closed(const LatticeModel& m, const Wavenumber& w, long long M2,
                                     FormVariant v = FormVariant::corrected, int branch = 0) {
    if (w.cos_k == 1 || w.cos_k == -1) throw DomainError("carrier k = 0 or pi is degenerate for reductions");
    const PQPair pq = pq_of(m);
    ReducedEquation r;
    r.kind = m.kind();
    r.wave = w;
    r.k = w.k();
    r.scales = solve_scales(m, w, M2, branch);
    r.M1 = double(r.scales.M1);
    r.M2 = double(r.scales.M2);
    if (auto s = w.sin_exact()) {
        auto x = carrier_point<Rational>(pq, w.cos_k, *s, r.scales);
        r.exact = closed_form_coefficients<Rational>(m, x, v);
        r.coef = r.exact->convert<double>();
    } else {
        auto x = carrier_point<double>(pq, w.cos_k, w.sin(), r.scales);
        r.coef = closed_form_coefficients<double>(m, x, v);
    }
    return r;
}

inline ReducedEquation reduce_mkdv(const Rational& p, const Rational& q, const Wavenumber& w, long long M2,
                                   FormVariant v = FormVariant::corrected) {
    return reduce_closed(LatticeModel::mkdv(p, q), w, M2, v);
}
inline ReducedEquation reduce_hietarinta(const Rational& e1, const Rational& e2, const Rational& o1, const Wavenumber& w,
                                         long long M2, FormVariant v = FormVariant::corrected) {
    return reduce_closed(LatticeModel::hietarinta(e1, e2, o1), w, M2, v);
}
inline ReducedEquation reduce_vkvm(const Rational& alpha, const Wavenumber& w, long long M2,
                                   FormVariant v = FormVariant::corrected) {
    return reduce_closed(LatticeModel::vkvm(alpha), w, M2, v);
}

}  // namespace dnls

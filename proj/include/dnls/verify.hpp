#pragma once

// Cross-validation of the closed-form coefficients against the expansion engine.

#include "epsilon_engine.hpp"

#include <random>
#include <string>
#include <vector>

namespace dnls {

struct VerifyPoint {
    Wavenumber wave;
    long long M1 = 0, M2 = 0;
    std::string params;
};

struct CoefficientDeviation {
    std::string name;
    std::string point;
    double deviation = 0;
};

struct VerifyReport {
    double max_deviation = 0;
    std::string worst;  // coefficient and point of the largest deviation
    std::size_t compared = 0;
    std::vector<VerifyPoint> points;
    std::vector<CoefficientDeviation> entries;
};

inline double relative_deviation(const cd& a, const cd& b) {
    const double d = std::abs(a - b), s = std::max(std::abs(a), std::abs(b));
    return s == 0 ? 0 : (s < 1e-300 ? d : d / s);
}

inline std::string describe_parameters(const LatticeModel& m) {
    switch (m.kind()) {
        case ModelKind::mkdv: return "p=" + to_string(m.p()) + " q=" + to_string(m.q());
        case ModelKind::hietarinta:
            return "e1=" + to_string(m.e1()) + " e2=" + to_string(m.e2()) + " o1=" + to_string(m.o1());
        case ModelKind::vkvm: return "alpha=" + to_string(m.alpha());
        case ModelKind::nikdv: return "alpha=" + to_string(m.alpha()) + " beta=" + to_string(m.beta());
    }
    return "";
}

// Rational point on the unit circle from a Pythagorean triple, random quadrant.
inline Wavenumber random_pythagorean(std::mt19937_64& rng, int gen_max = 7) {
    std::uniform_int_distribution<int> g(1, gen_max), coin(0, 1);
    for (;;) {
        const long long a = g(rng), b = g(rng);
        if (a <= b) continue;
        const long long h = a * a + b * b;
        Rational c = coin(rng) ? make_rational(a * a - b * b, h) : make_rational(2 * a * b, h);
        if (coin(rng)) c = -c;
        if (c == 1 || c == -1 || c == 0) continue;
        return Wavenumber{c, coin(rng) ? 1 : -1};
    }
}

// Smallest |M2| with integer M1, times a small random multiplier and sign.
inline long long admissible_M2(const LatticeModel& m, const Wavenumber& w, std::mt19937_64& rng) {
    const PQPair pq = pq_of(m);
    std::uniform_int_distribution<int> mult(1, 3), coin(0, 1);
    const long long f = mult(rng) * (coin(rng) ? 1 : -1);
    if (pq_degenerate(pq)) return f;
    const Rational D = pq.P * pq.P + pq.Q * pq.Q - 2 * pq.P * pq.Q * w.cos_k;
    const Rational ratio = D / (pq.P * pq.P - pq.Q * pq.Q);
    return boost::multiprecision::denominator(ratio).convert_to<long long>() * f;
}

inline LatticeModel random_model(ModelKind kind, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num(-6, 6), den(1, 3);
    auto r = [&] { return make_rational(num(rng), den(rng)); };
    for (;;) {
        try {
            switch (kind) {
                case ModelKind::mkdv: {
                    const Rational p = r(), q = r();
                    if (p * p == q * q) continue;
                    return LatticeModel::mkdv(p, q);
                }
                case ModelKind::hietarinta: {
                    auto m = LatticeModel::hietarinta(r(), r(), r());
                    pq_of(m);
                    return m;
                }
                case ModelKind::vkvm: {
                    const Rational a = r();
                    if (a == 1) continue;
                    return LatticeModel::vkvm(a);
                }
                case ModelKind::nikdv: throw DomainError("nikdv has no closed-form coefficients to verify");
            }
        } catch (const DomainError&) {
            if (kind == ModelKind::nikdv) throw;
        }
    }
}

namespace detail {

// Closed-form entry name -> value the engine predicts for it.
inline std::vector<std::pair<std::string, cd>> engine_targets(const LatticeModel& m, const ReducedEquation& e) {
    std::vector<std::pair<std::string, cd>> t;
    auto raw = [&](const char* n) { return e.coef.get(n).to_cd(); };
    switch (m.kind()) {
        case ModelKind::mkdv:
            t = {{"c3", raw("c3")}, {"z.c1", e.c1()}, {"z.c2", e.c2()}, {"z.c3", raw("c3")},
                 {"continuum.closed", e.continuum()}};
            break;
        case ModelKind::hietarinta:
            t = {{"c3", raw("c3")},     {"c4", raw("c4")},          {"c5", raw("c5")},
                 {"trig.c1", e.c1()}, {"trig.c2", e.c2()},       {"trig.c3hat", e.cubic()},
                 {"trig.c4", e.c_psi0()}};
            break;
        case ModelKind::vkvm:
            t = {{"c3", raw("c3")},      {"c4", raw("c4")},      {"trig.c1", e.c1()},
                 {"trig.c2", e.c2()},    {"trig.c3", raw("c3")}, {"trig.c4hat", e.cubic()}};
            break;
        case ModelKind::nikdv: break;
    }
    return t;
}

}  // namespace detail

// Compares every closed-form coefficient with the engine at one point.
inline void verify_point(const LatticeModel& m, const Wavenumber& w, long long M2, VerifyReport& rep, double fail_above) {
    const ReducedEquation closed = reduce_closed(m, w, M2);
    const ReducedEquation engine = reduce_with_engine(m, w, M2);
    const std::string where = to_string(m.kind()) + "(" + describe_parameters(m) + ") cos k=" + to_string(w.cos_k) +
                              " sin sign=" + std::to_string(w.sin_sign) + " M1=" + std::to_string(closed.scales.M1) +
                              " M2=" + std::to_string(closed.scales.M2);
    rep.points.push_back({w, closed.scales.M1, closed.scales.M2, describe_parameters(m)});
    std::vector<std::pair<std::string, std::pair<cd, cd>>> pairs = {
        {"c1", {closed.c1(), engine.c1()}},       {"c2", {closed.c2(), engine.c2()}},
        {"cubic", {closed.cubic(), engine.cubic()}}, {"c_psi0", {closed.c_psi0(), engine.c_psi0()}},
        {"p1", {closed.p1(), engine.p1()}}};
    if (closed.coef.nonlocal || engine.coef.nonlocal) pairs.push_back({"p2", {closed.p2(), engine.p2()}});
    for (const auto& [name, value] : detail::engine_targets(m, engine))
        if (closed.coef.has(name)) pairs.push_back({name, {closed.coef.get(name).to_cd(), value}});
    for (const auto& [name, v] : pairs) {
        const double d = relative_deviation(v.first, v.second);
        rep.entries.push_back({name, where, d});
        ++rep.compared;
        if (d > rep.max_deviation || rep.worst.empty()) {
            rep.max_deviation = std::max(rep.max_deviation, d);
            if (d >= rep.max_deviation) rep.worst = name + " at " + where;
        }
        if (d > fail_above)
            throw NumericalError("closed form and engine disagree on " + name + " at " + where + ": relative deviation " +
                                 std::to_string(d));
    }
}

// Random admissible points of a fixed model.
inline VerifyReport verify_closed_forms(const LatticeModel& m, int sample_count, std::uint64_t seed = 1,
                                        double fail_above = 1e-8) {
    std::mt19937_64 rng(seed);
    VerifyReport rep;
    int done = 0, attempts = 0;
    while (done < sample_count) {
        if (++attempts > 50 * sample_count + 50) throw NumericalError("could not find enough admissible sample points");
        const Wavenumber w = random_pythagorean(rng);
        long long M2 = 0;
        try {
            M2 = admissible_M2(m, w, rng);
            reduce_closed(m, w, M2);
            reduce_with_engine(m, w, M2);
        } catch (const Error&) {
            continue;  // degenerate carrier (vanishing denominator), resample
        }
        verify_point(m, w, M2, rep, fail_above);
        ++done;
    }
    return rep;
}

// Random parameters and admissible points.
inline VerifyReport verify_closed_forms(ModelKind kind, int sample_count, std::uint64_t seed = 1, double fail_above = 1e-8) {
    std::mt19937_64 rng(seed);
    VerifyReport rep;
    int done = 0, attempts = 0;
    while (done < sample_count) {
        if (++attempts > 50 * sample_count + 50) throw NumericalError("could not find enough admissible sample points");
        const LatticeModel m = random_model(kind, rng);
        const Wavenumber w = random_pythagorean(rng);
        long long M2 = 0;
        try {
            M2 = admissible_M2(m, w, rng);
            reduce_closed(m, w, M2);
            reduce_with_engine(m, w, M2);
        } catch (const Error&) {
            continue;
        }
        verify_point(m, w, M2, rep, fail_above);
        ++done;
    }
    return rep;
}

// Exact solve of a square Vandermonde system sum_j a_j x_i^(n-1-j) = y_i.
inline std::vector<Rational> vandermonde_solve(const std::vector<Rational>& x, const std::vector<Rational>& y) {
    const std::size_t n = x.size();
    std::vector<std::vector<Rational>> A(n, std::vector<Rational>(n + 1));
    for (std::size_t i = 0; i < n; ++i) {
        Rational p = 1;
        for (std::size_t j = n; j-- > 0;) {
            A[i][j] = p;
            p *= x[i];
        }
        A[i][n] = y[i];
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        while (piv < n && A[piv][c] == 0) ++piv;
        if (piv == n) throw NumericalError("singular interpolation system");
        std::swap(A[c], A[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || A[r][c] == 0) continue;
            const Rational f = A[r][c] / A[c][c];
            for (std::size_t k = c; k <= n; ++k) A[r][k] -= f * A[c][k];
        }
    }
    std::vector<Rational> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = A[i][n] / A[i][i];
    return a;
}

struct PolynomialCheck {
    std::vector<Rational> Q, R;          // reconstructed from the engine, highest power first
    std::vector<Rational> Q_closed, R_closed;
    bool match = false;
};

// Reconstructs the numerator polynomials of c3 and c5 from engine values at
// real rational probes z (S = 1, M1 and M2 from the general scale form) and
// compares them with the closed Q1..Q6 and R1..R4.
inline PolynomialCheck hietarinta_polynomial_check(const LatticeModel& m, FormVariant v = FormVariant::corrected) {
    if (m.kind() != ModelKind::hietarinta) throw DomainError("polynomial check needs the hietarinta model");
    using C = Cx<Rational>;
    const PQPair pq = pq_of(m);
    const Rational e1 = m.e1(), e2 = m.e2(), o1 = m.o1();
    const auto parts = hietarinta_parts<Rational>(e1, e2, o1, v);
    const Rational P1 = parts.P1, P2 = parts.P2;
    std::vector<Rational> xs, qv, rv;
    for (long long t = 2; xs.size() < 6 && t < 60; ++t) {
        const Rational z = make_rational(t, t % 3 == 0 ? 2 : 1) * (t % 2 ? 1 : -1);
        if (xs.end() != std::find(xs.begin(), xs.end(), z)) continue;
        try {
            const C zc(z), one(Rational(1));
            const C W = m.omega_from_linear(zc);
            Probe<Rational> pr;
            pr.z = zc;
            pr.Omega = W;
            pr.M1 = W * (C(pq.P) * zc - C(pq.Q));
            pr.M2 = zc * (C(pq.P) * W + C(pq.Q));
            if (pr.M1.is_zero() || pr.M2.is_zero()) continue;
            const auto h = solve_hierarchy<Rational>(EpsilonEngine<Rational>::expand(m, pr), 0.0);
            const Rational A = P1 + P2 * z, B = P1 * z + P2, zm = z - 1;
            if (A == 0 || B == 0 || zm == 0) continue;
            const C c3 = h.G3 / h.K, c5 = h.c_psi2;
            const C q = c3 * C(e2 * (P1 - e1 * e2) * A * A * B * B * z / (zm * (P1 - P2)));
            const C r = c5 * C(e2 * A * A * B * B * z / (zm * zm * (P1 - P2)));
            if (q.im != 0 || r.im != 0) throw NumericalError("engine numerator is not real at a real probe");
            xs.push_back(z);
            qv.push_back(q.re);
            rv.push_back(r.re);
        } catch (const DomainError&) {
        }
    }
    if (xs.size() < 6) throw NumericalError("not enough regular probes for the polynomial check");
    PolynomialCheck out;
    out.Q = vandermonde_solve(xs, qv);
    out.R = vandermonde_solve(xs, rv);  // degree 5 fit of R1 z^4 + R2 z^3 + R3 z + R4
    out.Q_closed.assign(parts.Q, parts.Q + 6);
    out.R_closed = {0, parts.Rr[0], parts.Rr[1], 0, parts.Rr[2], parts.Rr[3]};
    out.match = out.Q == out.Q_closed && out.R == out.R_closed;
    return out;
}

}  // namespace dnls

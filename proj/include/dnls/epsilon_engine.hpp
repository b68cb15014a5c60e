#pragma once

// Mechanical multiscale expansion. The modulated-wave ansatz
//   u - b = eps psi E + eps^2 (psi2 E^2 + psi0) + c.c.
// is substituted into a model written in deviation variables, every shifted
// envelope is expanded with the shift stencils, products are truncated at
// eps^3 and the result is collected by (eps order, harmonic). Coefficients are
// evaluated at numeric probes of (z, Omega, M1, M2), exactly when the probe is
// Gaussian-rational.

#include "core.hpp"
#include "diffcalc.hpp"
#include "models.hpp"
#include "reduction.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace dnls {

enum class Field : std::uint8_t { psi0 = 0, psi1 = 1, psi2 = 2 };

struct EnvelopeSymbol {
    Field field = Field::psi1;
    bool conj = false;
    std::array<int, 3> shift{};  // (n1, m1, m2), or (n2, 0, m2) after substitution

    auto operator<=>(const EnvelopeSymbol&) const = default;

    std::string str() const {
        std::string s = field == Field::psi1 ? "psi" : field == Field::psi2 ? "psi2" : "psi0";
        if (conj) s = "conj(" + s + ")";
        s += "[" + std::to_string(shift[0]) + "," + std::to_string(shift[1]) + "," + std::to_string(shift[2]) + "]";
        return s;
    }
};

using Monomial = std::vector<EnvelopeSymbol>;  // sorted

inline std::string to_string(const Monomial& m) {
    std::string s;
    for (const auto& x : m) s += (s.empty() ? "" : "*") + x.str();
    return s.empty() ? "1" : s;
}

template <class V>
using EnvelopePoly = std::map<Monomial, V>;

using EqKey = std::pair<int, int>;  // (eps order, harmonic)

template <class R>
struct Probe {
    Cx<R> z, Omega, M1, M2;
};

namespace detail {

template <class V>
struct SeriesTerm {
    int order;
    int harmonic;
    Monomial mono;
    V coef;
};

template <class V>
bool is_zero_value(const V& v) {
    return v.is_zero();
}

template <class V>
void accumulate(std::map<EqKey, EnvelopePoly<V>>& out, const SeriesTerm<V>& t) {
    auto& poly = out[{t.order, t.harmonic}];
    auto it = poly.find(t.mono);
    if (it == poly.end())
        poly.emplace(t.mono, t.coef);
    else
        it->second += t.coef;
}

template <class V>
void prune(std::map<EqKey, EnvelopePoly<V>>& eqs) {
    for (auto& [key, poly] : eqs)
        for (auto it = poly.begin(); it != poly.end();)
            it = is_zero_value(it->second) ? poly.erase(it) : std::next(it);
}

}  // namespace detail

template <class R>
class EpsilonEngine {
public:
    using V = Cx<R>;
    using Equations = std::map<EqKey, EnvelopePoly<V>>;
    static constexpr int max_order = 3;

    // Ansatz expansion of u at lattice offset (a, b), up to eps^3.
    static std::vector<detail::SeriesTerm<V>> corner_series(Offset off, const Probe<R>& pr) {
        const Stencil st = shift_stencil(off[0], off[1]);
        std::vector<detail::SeriesTerm<V>> out;
        const V one(R(1));
        auto phase = [&](int s) { return ipow(pr.z, (long long)s * off[0]) * ipow(pr.Omega, (long long)s * off[1]); };
        auto emit = [&](Field f, bool conj, int base_order, int harmonic, int max_k, const V& ph) {
            for (int k = 0; k <= max_k; ++k)
                for (const auto& t : st.terms) {
                    SymCoef part = t.coef.eps_part(k);
                    if (part.empty()) continue;
                    V c = part.template eval<V>(one, pr.M1, pr.M2) * ph;
                    if (c.is_zero()) continue;
                    out.push_back({base_order + k, harmonic, Monomial{EnvelopeSymbol{f, conj, t.shift}}, c});
                }
        };
        emit(Field::psi1, false, 1, 1, 2, phase(1));
        emit(Field::psi1, true, 1, -1, 2, phase(-1));
        emit(Field::psi2, false, 2, 2, 1, phase(2));
        emit(Field::psi2, true, 2, -2, 1, phase(-2));
        emit(Field::psi0, false, 2, 0, 1, one);
        return out;
    }

    // Determining equations in the (n1, m1, m2) shifts.
    static Equations expand(const LatticeModel& model, const Probe<R>& pr, bool linear_only = false) {
        const CornerPoly& F = model.deviation_polynomial();
        std::vector<std::vector<detail::SeriesTerm<V>>> corners;
        for (const auto& off : F.corners()) corners.push_back(corner_series(off, pr));
        Equations eqs;
        for (const auto& [mono, c] : F.terms()) {
            if (mono.empty()) throw DomainError("model is not zero at its background");
            if (linear_only && mono.size() > 1) continue;
            if (mono.size() > 3) continue;  // first contributes at eps^4
            std::vector<detail::SeriesTerm<V>> acc{{0, 0, {}, as_value<V>(c)}};
            for (int idx : mono) {
                std::vector<detail::SeriesTerm<V>> next;
                for (const auto& a : acc)
                    for (const auto& b : corners[idx]) {
                        if (a.order + b.order > max_order) continue;
                        Monomial m = a.mono;
                        m.insert(m.end(), b.mono.begin(), b.mono.end());
                        std::sort(m.begin(), m.end());
                        next.push_back({a.order + b.order, a.harmonic + b.harmonic, std::move(m), a.coef * b.coef});
                    }
                acc = std::move(next);
            }
            for (const auto& t : acc) detail::accumulate(eqs, t);
        }
        detail::prune(eqs);
        return eqs;
    }

    // psi(n1, m1, m2) = phi(n1 - m1, m2).
    static Equations substitute(const Equations& eqs) {
        Equations out;
        for (const auto& [key, poly] : eqs)
            for (const auto& [mono, c] : poly) {
                Monomial m = mono;
                for (auto& s : m) s.shift = {s.shift[0] - s.shift[1], 0, s.shift[2]};
                std::sort(m.begin(), m.end());
                detail::accumulate(out, detail::SeriesTerm<V>{key.first, key.second, std::move(m), c});
            }
        detail::prune(out);
        return out;
    }

    static V coefficient(const Equations& eqs, EqKey key, Monomial m) {
        std::sort(m.begin(), m.end());
        auto it = eqs.find(key);
        if (it == eqs.end()) return V(R(0));
        auto jt = it->second.find(m);
        return jt == it->second.end() ? V(R(0)) : jt->second;
    }

    static double max_abs(const Equations& eqs, EqKey key) {
        auto it = eqs.find(key);
        if (it == eqs.end()) return 0;
        double m = 0;
        for (const auto& kv : it->second) m = std::max(m, magnitude(kv.second));
        return m;
    }
};

inline EnvelopeSymbol sym(Field f, int n2 = 0, int m2 = 0, bool conj = false) {
    return EnvelopeSymbol{f, conj, {n2, 0, m2}};
}

// Reduced equation extracted from the substituted hierarchy.
template <class R>
struct HierarchySolution {
    using V = Cx<R>;
    V K;          // coefficient of phi_{m2+1}
    V c1, c2;     // step-two and step-one second differences, divided by K
    V G3, G2, G0; // raw cubic, psi2*conj(phi) and psi0*phi couplings
    V p1, p2;
    V cubic;      // (G3 + G2 p1)/K
    V c_psi0;     // G0/K
    V c_psi2;     // G2/K
    double residual_11 = 0, residual_12 = 0, residual_20 = 0;
};

template <class R>
double tolerance_scale() {
    return std::is_same_v<R, Rational> ? 0.0 : 1e-10;
}

template <class R>
HierarchySolution<R> solve_hierarchy(const typename EpsilonEngine<R>::Equations& raw, double tol = -1) {
    using E = EpsilonEngine<R>;
    using V = Cx<R>;
    if (tol < 0) tol = tolerance_scale<R>();
    HierarchySolution<R> h;
    const auto eqs = E::substitute(raw);
    h.residual_11 = E::max_abs(eqs, {1, 1});
    h.residual_12 = E::max_abs(eqs, {2, 1});
    h.residual_20 = E::max_abs(eqs, {2, 0});
    h.K = E::coefficient(eqs, {3, 1}, {sym(Field::psi1, 0, 1)});
    const double scale = std::max(1.0, magnitude(h.K));
    if (h.residual_11 > tol * scale) throw DomainError("order-1 equation not annihilated: Omega is not on the dispersion relation");
    if (h.residual_12 > tol * scale) throw DomainError("order-2 equation not annihilated: inadmissible scales (M1, M2)");
    if (h.K.is_zero()) throw DomainError("degenerate carrier: the slow-time coefficient vanishes");

    const V A2 = E::coefficient(eqs, {2, 2}, {sym(Field::psi2)});
    const V B2 = E::coefficient(eqs, {2, 2}, {sym(Field::psi1), sym(Field::psi1)});
    if (A2.is_zero()) throw DomainError("degenerate carrier: second harmonic resonates");
    h.p1 = -B2 / A2;

    const V A0 = E::coefficient(eqs, {3, 0}, {sym(Field::psi0, 1)});
    const V B0 = E::coefficient(eqs, {3, 0}, {sym(Field::psi1, 0, 0, true), sym(Field::psi1, 1)});
    if (A0.is_zero()) {
        if (!B0.is_zero()) throw DomainError("degenerate carrier: mean-field relation has no psi0 term");
        h.p2 = V(R(0));
    } else {
        h.p2 = -B0 / A0;
    }

    h.c1 = E::coefficient(eqs, {3, 1}, {sym(Field::psi1, 2)}) / h.K;
    h.c2 = E::coefficient(eqs, {3, 1}, {sym(Field::psi1, 1)}) / h.K;
    h.G3 = E::coefficient(eqs, {3, 1}, {sym(Field::psi1), sym(Field::psi1), sym(Field::psi1, 0, 0, true)});
    h.G2 = E::coefficient(eqs, {3, 1}, {sym(Field::psi2), sym(Field::psi1, 0, 0, true)});
    h.G0 = E::coefficient(eqs, {3, 1}, {sym(Field::psi0), sym(Field::psi1)});
    h.cubic = (h.G3 + h.G2 * h.p1) / h.K;
    h.c_psi0 = h.G0 / h.K;
    h.c_psi2 = h.G2 / h.K;
    return h;
}

// Checks that the substituted (3,1) and (3,0) equations have exactly the
// canonical shape implied by the extracted coefficients. Returns the largest
// unexplained coefficient.
template <class R>
double canonical_shape_defect(const typename EpsilonEngine<R>::Equations& raw, const HierarchySolution<R>& h) {
    using E = EpsilonEngine<R>;
    using V = Cx<R>;
    const auto eqs = E::substitute(raw);
    typename E::Equations model;
    auto put = [&](EqKey key, Monomial m, const V& c) {
        std::sort(m.begin(), m.end());
        model[key][m] += c;
    };
    const V K = h.K;
    put({3, 1}, {sym(Field::psi1, 0, 1)}, K);
    put({3, 1}, {sym(Field::psi1)}, -K - V(R(2)) * K * h.c1 - V(R(2)) * K * h.c2);
    for (int s : {-2, 2}) put({3, 1}, {sym(Field::psi1, s)}, K * h.c1);
    for (int s : {-1, 1}) put({3, 1}, {sym(Field::psi1, s)}, K * h.c2);
    put({3, 1}, {sym(Field::psi1), sym(Field::psi1), sym(Field::psi1, 0, 0, true)}, h.G3);
    put({3, 1}, {sym(Field::psi2), sym(Field::psi1, 0, 0, true)}, h.G2);
    put({3, 1}, {sym(Field::psi0), sym(Field::psi1)}, h.G0);
    const V A0 = E::coefficient(eqs, {3, 0}, {sym(Field::psi0, 1)});
    const V B0 = -A0 * h.p2;
    put({3, 0}, {sym(Field::psi0, 1)}, A0);
    put({3, 0}, {sym(Field::psi0, -1)}, -A0);
    put({3, 0}, {sym(Field::psi1, 0, 0, true), sym(Field::psi1, 1)}, B0);
    put({3, 0}, {sym(Field::psi1, 0, 0, true), sym(Field::psi1, -1)}, -B0);
    put({3, 0}, {sym(Field::psi1), sym(Field::psi1, 1, 0, true)}, B0);
    put({3, 0}, {sym(Field::psi1), sym(Field::psi1, -1, 0, true)}, -B0);
    double worst = 0;
    for (EqKey key : {EqKey{3, 1}, EqKey{3, 0}}) {
        std::set<Monomial> monos;
        if (eqs.count(key))
            for (const auto& kv : eqs.at(key)) monos.insert(kv.first);
        if (model.count(key))
            for (const auto& kv : model.at(key)) monos.insert(kv.first);
        for (const auto& m : monos) {
            V a = E::coefficient(eqs, key, m), b = E::coefficient(model, key, m);
            worst = std::max(worst, magnitude(a - b));
        }
    }
    return worst;
}

template <class R>
nlohmann::ordered_json equations_to_json(const typename EpsilonEngine<R>::Equations& eqs) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [key, poly] : eqs) {
        if (poly.empty()) continue;
        nlohmann::ordered_json e;
        e["order"] = key.first;
        e["harmonic"] = key.second;
        auto terms = nlohmann::ordered_json::array();
        for (const auto& [m, c] : poly) {
            nlohmann::ordered_json t;
            t["monomial"] = to_string(m);
            if constexpr (std::is_same_v<R, Rational>) {
                t["re"] = to_string(c.re);
                t["im"] = to_string(c.im);
            } else {
                t["re"] = to_double(c.re);
                t["im"] = to_double(c.im);
            }
            terms.push_back(t);
        }
        e["terms"] = terms;
        arr.push_back(e);
    }
    return arr;
}

// Probe at an admissible carrier of a PQ model. Omega comes from the model's
// own linear part, not from the PQ closed form.
template <class R>
Probe<R> probe_for(const LatticeModel& m, const Cx<R>& z, long long M1, long long M2) {
    Probe<R> p;
    p.z = z;
    p.Omega = m.omega_from_linear(z);
    p.M1 = Cx<R>(R(M1));
    p.M2 = Cx<R>(R(M2));
    return p;
}

template <class R>
CoefficientSet<R> engine_coefficients(const LatticeModel& m, const Probe<R>& pr, HierarchySolution<R>* out = nullptr) {
    const auto raw = EpsilonEngine<R>::expand(m, pr);
    auto h = solve_hierarchy<R>(raw);
    if (out) *out = h;
    CoefficientSet<R> c;
    c.c1 = h.c1;
    c.c2 = h.c2;
    c.cubic = h.cubic;
    c.c_psi0 = h.c_psi0;
    c.p1 = h.p1;
    c.p2 = h.p2;
    c.nonlocal = !h.G0.is_zero();
    c.raw = {{"K", h.K}, {"G3/K", h.G3 / h.K}, {"G2/K", h.c_psi2}, {"G0/K", h.c_psi0}};
    switch (m.kind()) {
        case ModelKind::mkdv: c.raw.push_back({"c3", h.c_psi2}); break;
        case ModelKind::hietarinta:
            c.raw.push_back({"c3", h.G3 / h.K});
            c.raw.push_back({"c4", h.c_psi0});
            c.raw.push_back({"c5", h.c_psi2});
            break;
        case ModelKind::vkvm:
            c.raw.push_back({"c3", h.c_psi0});
            c.raw.push_back({"c4", h.c_psi2});
            break;
        case ModelKind::nikdv:
            c.raw.push_back({"ni.c1", h.c2});
            c.raw.push_back({"ni.c2", h.c_psi0});
            break;
    }
    return c;
}

// Engine reduction of a PQ model at an admissible carrier.
inline ReducedEquation reduce_with_engine(const LatticeModel& m, const Wavenumber& w, long long M2, int branch = 0) {
    if (w.cos_k == 1 || w.cos_k == -1) throw DomainError("carrier k = 0 or pi is degenerate for reductions");
    ReducedEquation r;
    r.kind = m.kind();
    r.wave = w;
    r.k = w.k();
    r.scales = solve_scales(m, w, M2, branch);
    r.M1 = double(r.scales.M1);
    r.M2 = double(r.scales.M2);
    if (auto s = w.sin_exact()) {
        Cx<Rational> z(w.cos_k, *s);
        r.exact = engine_coefficients<Rational>(m, probe_for<Rational>(m, z, r.scales.M1, r.scales.M2));
        r.coef = r.exact->convert<double>();
    } else {
        Cx<double> z(to_double(w.cos_k), w.sin());
        r.coef = engine_coefficients<double>(m, probe_for<double>(m, z, r.scales.M1, r.scales.M2));
    }
    return r;
}

struct NikdvScales {
    double S = 1, M1 = 0, M2 = 0;
};

// Real scale constant S; M1 = 2 S cos omega, M2 = 6 S alpha cos k sin^2 k.
inline NikdvScales nikdv_scales(const LatticeModel& m, double k, double S = 1) {
    if (m.kind() != ModelKind::nikdv) throw DomainError("nikdv scales need the nikdv model");
    const CarrierWave cw = m.dispersion(k);
    const double a = to_double(m.alpha());
    return {S, 2 * S * std::cos(cw.omega), 6 * S * a * std::cos(k) * std::sin(k) * std::sin(k)};
}

// The nikdv reduction in the common form: c1 = 0, c2 the one-step
// coefficient, c_psi0 the coupling shared by psi0 phi and psi2 conj(phi).
inline ReducedEquation reduce_nikdv(const Rational& alpha, const Rational& beta, double k, double S = 1) {
    const LatticeModel m = LatticeModel::nikdv(alpha, beta);
    if (std::abs(std::sin(k)) < 1e-12)
        throw DomainError("carrier k = 0 or pi is degenerate for reductions");
    const CarrierWave cw = m.dispersion(k);
    const NikdvScales sc = nikdv_scales(m, k, S);
    Probe<double> pr;
    pr.z = Cx<double>(cw.z.real(), cw.z.imag());
    pr.Omega = Cx<double>(cw.Omega.real(), cw.Omega.imag());
    pr.M1 = Cx<double>(sc.M1);
    pr.M2 = Cx<double>(sc.M2);
    ReducedEquation r;
    r.kind = ModelKind::nikdv;
    r.k = k;
    r.M1 = sc.M1;
    r.M2 = sc.M2;
    r.scales.S = cd(S, 0);
    r.scales.rho = std::abs(S);
    r.scales.theta = S >= 0 ? 0 : std::numbers::pi;
    r.coef = engine_coefficients<double>(m, pr);
    return r;
}

}  // namespace dnls

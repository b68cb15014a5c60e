#pragma once

// The four lattice equations as exact polynomials in their stencil values:
// residuals, explicit stepping, linear dispersion and group velocity.

#include "core.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace dnls {

enum class ModelKind { mkdv, hietarinta, vkvm, nikdv };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::mkdv: return "mkdv";
        case ModelKind::hietarinta: return "hietarinta";
        case ModelKind::vkvm: return "vkvm";
        case ModelKind::nikdv: return "nikdv";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "mkdv") return ModelKind::mkdv;
    if (s == "hietarinta") return ModelKind::hietarinta;
    if (s == "vkvm") return ModelKind::vkvm;
    if (s == "nikdv") return ModelKind::nikdv;
    throw ConfigError("unknown model '" + s + "'");
}

using Offset = std::array<int, 2>;

// Polynomial in the field values at a fixed list of lattice offsets.
class CornerPoly {
public:
    using Mono = std::vector<int>;  // sorted corner indices, repeated for powers

    CornerPoly() = default;
    explicit CornerPoly(std::vector<Offset> corners) : corners_(std::move(corners)) {}

    const std::vector<Offset>& corners() const { return corners_; }
    const std::map<Mono, Rational>& terms() const { return terms_; }

    void add(const Rational& c, Mono m) {
        std::sort(m.begin(), m.end());
        auto& slot = terms_[m];
        slot += c;
        if (slot == 0) terms_.erase(m);
    }

    int index_of(Offset o) const {
        for (std::size_t i = 0; i < corners_.size(); ++i)
            if (corners_[i] == o) return static_cast<int>(i);
        throw DomainError("offset not in stencil");
    }

    template <class V>
    V eval(const std::vector<V>& u) const {
        V acc(0);
        for (const auto& [m, c] : terms_) {
            V t = as_value<V>(c);
            for (int i : m) t = t * u[i];
            acc = acc + t;
        }
        return acc;
    }

    // Substitutes u -> b + u in every slot.
    CornerPoly translated(const Rational& b) const {
        CornerPoly out(corners_);
        for (const auto& [m, c] : terms_) {
            const std::size_t d = m.size();
            for (std::size_t mask = 0; mask < (std::size_t(1) << d); ++mask) {
                Mono kept;
                Rational f = c;
                for (std::size_t i = 0; i < d; ++i) {
                    if (mask & (std::size_t(1) << i))
                        kept.push_back(m[i]);
                    else
                        f *= b;
                }
                out.add(f, kept);
            }
        }
        return out;
    }

    CornerPoly degree_part(std::size_t d) const {
        CornerPoly out(corners_);
        for (const auto& [m, c] : terms_)
            if (m.size() == d) out.terms_[m] = c;
        return out;
    }

    std::size_t degree() const {
        std::size_t d = 0;
        for (const auto& kv : terms_) d = std::max(d, kv.first.size());
        return d;
    }

    // Coefficient of the linear monomial in slot i.
    Rational linear_coefficient(int i) const {
        auto it = terms_.find(Mono{i});
        return it == terms_.end() ? Rational(0) : it->second;
    }

private:
    std::vector<Offset> corners_;
    std::map<Mono, Rational> terms_;
};

struct CarrierWave {
    double k = 0;
    cd z{1, 0};
    double omega = 0;
    cd Omega{1, 0};
    double group_velocity = 0;
};

// Quad corners are ordered u, u10, u01, u11.
inline const std::vector<Offset>& quad_corners() {
    static const std::vector<Offset> c{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    return c;
}
inline const std::vector<Offset>& nikdv_corners() {
    static const std::vector<Offset> c{{0, 1}, {0, -1}, {3, 0}, {1, 0}, {-1, 0}, {-3, 0}};
    return c;
}

enum class QuadSolve { up_right, up_left };

class LatticeModel {
public:
    static LatticeModel mkdv(const Rational& p, const Rational& q) {
        if (p == 0 || q == 0) throw DomainError("mkdv needs p and q different from zero");
        LatticeModel m(ModelKind::mkdv);
        m.p_ = p;
        m.q_ = q;
        m.background_ = 1;
        CornerPoly f(quad_corners());
        f.add(p, {0, 2});
        f.add(-p, {1, 3});
        f.add(-q, {0, 1});
        f.add(q, {2, 3});
        m.finish(f);
        return m;
    }

    // o2 defaults to the value that makes the dispersion real.
    static LatticeModel hietarinta(const Rational& e1, const Rational& e2, const Rational& o1,
                                   std::optional<Rational> o2 = std::nullopt) {
        LatticeModel m(ModelKind::hietarinta);
        m.e1_ = e1;
        m.e2_ = e2;
        m.o1_ = o1;
        m.o2_ = o2 ? *o2 : hietarinta_o2(e1, e2, o1);
        m.background_ = 0;
        const Rational& O2 = m.o2_;
        CornerPoly f(quad_corners());
        // linear part minus the nonlinear right-hand side, with u, u10, u01, u11 = 0, 1, 2, 3
        f.add(o1 * O2 * (e1 - e2), {0});
        f.add(e1 * e2 * (o1 - O2), {3});
        f.add(e1 * O2 * (e2 - o1), {1});
        f.add(e2 * o1 * (O2 - e1), {2});
        f.add(-(O2 - e1), {1, 0, 3});
        f.add(-(e2 - o1), {2, 0, 3});
        f.add(-(o1 - O2), {0, 1, 2});
        f.add(-(e1 - e2), {3, 1, 2});
        f.add(-o1 * (e2 - O2), {2, 0});
        f.add(-O2 * (o1 - e1), {1, 0});
        f.add(-e2 * (e1 - o1), {2, 3});
        f.add(-e1 * (O2 - e2), {1, 3});
        f.add(-(O2 * e2 - o1 * e1), {0, 3});
        f.add(O2 * e2 - o1 * e1, {1, 2});
        m.finish(f);
        return m;
    }

    static LatticeModel vkvm(const Rational& alpha) {
        if (alpha == 0) throw DomainError("vkvm needs alpha different from zero");
        LatticeModel m(ModelKind::vkvm);
        m.alpha_ = alpha;
        m.background_ = 1;
        CornerPoly f(quad_corners());
        // u01 (alpha u11 - 1) - u10 (alpha u - 1)
        f.add(alpha, {2, 3});
        f.add(-1, {2});
        f.add(-alpha, {1, 0});
        f.add(1, {1});
        m.finish(f);
        return m;
    }

    static LatticeModel nikdv(const Rational& alpha, const Rational& beta) {
        LatticeModel m(ModelKind::nikdv);
        m.alpha_ = alpha;
        m.beta_ = beta;
        m.background_ = 0;
        CornerPoly f(nikdv_corners());
        const Rational a4 = alpha / 4;
        f.add(1, {0});
        f.add(-1, {1});
        f.add(-a4, {2});
        f.add(3 * a4, {3});
        f.add(-3 * a4, {4});
        f.add(a4, {5});
        f.add(-beta, {3, 3});
        f.add(beta, {4, 4});
        m.finish(f);
        return m;
    }

    static Rational hietarinta_o2(const Rational& e1, const Rational& e2, const Rational& o1) {
        Rational den = e1 * e2 - o1 * (e1 - e2);
        if (den == 0) throw DomainError("no real dispersion: e1 e2 - o1 (e1 - e2) = 0");
        return e1 * e2 * o1 / den;
    }

    ModelKind kind() const { return kind_; }
    bool is_quad() const { return kind_ != ModelKind::nikdv; }
    const Rational& p() const { return p_; }
    const Rational& q() const { return q_; }
    const Rational& e1() const { return e1_; }
    const Rational& e2() const { return e2_; }
    const Rational& o1() const { return o1_; }
    const Rational& o2() const { return o2_; }
    const Rational& alpha() const { return alpha_; }
    const Rational& beta() const { return beta_; }
    const Rational& background() const { return background_; }

    // Equation in the simulated variables, and in deviations from the background.
    const CornerPoly& polynomial() const { return poly_; }
    const CornerPoly& deviation_polynomial() const { return dev_; }
    CornerPoly linear_part() const { return dev_.degree_part(1); }

    // Left-minus-right value of the defining equation.
    double residual(const std::vector<double>& values) const {
        if (values.size() != poly_.corners().size()) throw DomainError("wrong number of stencil values");
        return eval_fast(values);
    }

    // Dispersion-reality condition; hietarinta needs the (e, o) relation, nikdv |alpha sin^3 k| <= 1.
    bool reality_holds() const {
        if (kind_ == ModelKind::hietarinta) return hietarinta_reality() == 0;
        return true;
    }
    Rational hietarinta_reality() const { return o1_ * o2_ * (e1_ - e2_) + e1_ * e2_ * (o1_ - o2_); }

    // Omega from the linear part: a0 + a1 z + Omega (a2 + a3 z) = 0 for quads.
    template <class V>
    V omega_from_linear(const V& z) const {
        if (!is_quad()) throw DomainError("omega_from_linear is for quad models");
        auto a = [&](int i) { return as_value<V>(dev_.linear_coefficient(i)); };
        V den = a(2) + a(3) * z;
        if (den == V(0)) throw DomainError("linear dispersion has a pole at this z");
        return -(a(0) + a(1) * z) / den;
    }

    CarrierWave dispersion(double k) const {
        CarrierWave c;
        c.k = k;
        c.z = std::polar(1.0, k);
        if (kind_ == ModelKind::nikdv) {
            const double s = to_double(alpha_) * std::pow(std::sin(k), 3);
            if (std::abs(s) > 1) throw DomainError("reality violated: |alpha sin^3 k| > 1");
            c.omega = std::asin(s);
            c.Omega = std::polar(1.0, -c.omega);
            const double root = std::sqrt(1 - s * s);
            if (root == 0) throw DomainError("group velocity singular: |alpha sin^3 k| = 1");
            c.group_velocity = 3 * to_double(alpha_) * std::cos(k) * std::sin(k) * std::sin(k) / root;
            return c;
        }
        if (!reality_holds()) throw DomainError("reality violated: o1 o2 (e1-e2) + e1 e2 (o1-o2) != 0");
        std::vector<cd> lin(lin_.begin(), lin_.end());
        const cd den = lin[2] + lin[3] * c.z;
        if (std::abs(den) < 1e-300) throw DomainError("linear dispersion has a pole at this k");
        c.Omega = -(lin[0] + lin[1] * c.z) / den;
        c.omega = -std::arg(c.Omega);
        c.group_velocity = group_velocity_z(c.z, c.Omega);
        return c;
    }

    // d omega/dk = -z Omega'(z)/Omega, differentiating the linear relation.
    double group_velocity_z(cd z, cd W) const {
        std::vector<cd> a(lin_.begin(), lin_.end());
        // d/dz [a0 + a1 z + W (a2 + a3 z)] = 0
        const cd dW = -(a[1] + W * a[3]) / (a[2] + a[3] * z);
        return (-z * dW / W).real();
    }

    // Affine solve for one missing quad corner.
    double step_quad(double a, double b, double c, QuadSolve dir, double delta_sing = 1e-12) const {
        if (!is_quad()) throw DomainError("step_quad needs a quad model");
        // up_right: (a, b, c) = (u, u10, u01) -> u11; up_left: (u, u10, u11) -> u01
        std::vector<double> v(4);
        int miss;
        if (dir == QuadSolve::up_right) {
            v = {a, b, c, 0.0};
            miss = 3;
        } else {
            v = {a, b, 0.0, c};
            miss = 2;
        }
        const double f0 = eval_fast(v);
        v[miss] = 1.0;
        const double f1 = eval_fast(v);
        const double slope = f1 - f0;
        const double scale = std::max({1.0, std::abs(a), std::abs(b), std::abs(c)});
        if (std::abs(slope) < delta_sing * scale) throw NumericalError("singular quad solve");
        return -f0 / slope;
    }

    // One leapfrog row for nikdv, periodic in n.
    std::vector<double> step_nikdv(const std::vector<double>& row, const std::vector<double>& prev) const {
        if (kind_ != ModelKind::nikdv) throw DomainError("step_nikdv needs the nikdv model");
        const std::size_t L = row.size();
        if (L < 7) throw DomainError("period must be at least 7");
        if (prev.size() != L) throw DomainError("rows differ in length");
        const double a4 = to_double(alpha_) / 4, b = to_double(beta_);
        std::vector<double> out(L);
        auto at = [&](long i) { return row[static_cast<std::size_t>(((i % long(L)) + long(L)) % long(L))]; };
        for (std::size_t n = 0; n < L; ++n) {
            const long i = static_cast<long>(n);
            const double u1 = at(i + 1), um1 = at(i - 1);
            out[n] = prev[n] + a4 * (at(i + 3) - 3 * u1 + 3 * um1 - at(i - 3)) + b * (u1 * u1 - um1 * um1);
        }
        return out;
    }

private:
    explicit LatticeModel(ModelKind k) : kind_(k) {}

    void finish(const CornerPoly& f) {
        poly_ = f;
        dev_ = f.translated(background_);
        lin_.clear();
        for (std::size_t i = 0; i < f.corners().size(); ++i) lin_.push_back(to_double(dev_.linear_coefficient(int(i))));
        fast_.clear();
        for (const auto& [m, c] : poly_.terms()) fast_.push_back({to_double(c), m});
    }

    double eval_fast(const std::vector<double>& u) const {
        double acc = 0;
        for (const auto& t : fast_) {
            double v = t.c;
            for (int i : t.idx) v *= u[i];
            acc += v;
        }
        return acc;
    }

    struct FastTerm {
        double c;
        std::vector<int> idx;
    };

    ModelKind kind_;
    Rational p_ = 0, q_ = 0, e1_ = 0, e2_ = 0, o1_ = 0, o2_ = 0, alpha_ = 0, beta_ = 0, background_ = 0;
    CornerPoly poly_, dev_;
    std::vector<double> lin_;
    std::vector<FastTerm> fast_;
};

// Unwraps a sampled omega(k) curve by multiples of 2 pi.
inline std::vector<double> unwrap_phase(std::vector<double> w) {
    for (std::size_t i = 1; i < w.size(); ++i) {
        while (w[i] - w[i - 1] > std::numbers::pi) w[i] -= 2 * std::numbers::pi;
        while (w[i] - w[i - 1] < -std::numbers::pi) w[i] += 2 * std::numbers::pi;
    }
    return w;
}

// The printed trigonometric mkdv group velocity, kept for comparison; it
// has the opposite sign of the rational form, which is the one used.
inline double mkdv_group_velocity_trig(double p, double q, double k) {
    return 2 * p * q / (p * p + q * q - (p * p - q * q) * std::cos(k));
}

}  // namespace dnls

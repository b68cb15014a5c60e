#pragma once

// Difference calculus on nested lattices: Stirling tables, the coefficients
// P(i,j) linking differences on the fine and the slow lattice, slow-order
// tests and the shift-expansion stencils.

#include "core.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace dnls {

enum class StirlingKind { first, second };

class StirlingTable {
public:
    explicit StirlingTable(int max_index) : max_(max_index) {
        if (max_index < 0) throw DomainError("negative Stirling table size");
        s1_.assign(max_ + 1, std::vector<BigInt>(max_ + 1, 0));
        s2_ = s1_;
        s1_[0][0] = 1;
        s2_[0][0] = 1;
        for (int n = 0; n < max_; ++n)
            for (int k = 1; k <= n + 1; ++k) {
                s1_[n + 1][k] = s1_[n][k - 1] - BigInt(n) * s1_[n][k];
                s2_[n + 1][k] = s2_[n][k - 1] + BigInt(k) * s2_[n][k];
            }
    }
    int max_index() const { return max_; }
    const BigInt& first(int n, int k) const { check(n, k); return s1_[n][k]; }
    const BigInt& second(int n, int k) const { check(n, k); return s2_[n][k]; }

private:
    void check(int n, int k) const {
        if (k < 0 || n < 0 || k > n || n > max_)
            throw DomainError("Stirling index out of range: (" + std::to_string(n) + "," + std::to_string(k) + ")");
    }
    int max_;
    std::vector<std::vector<BigInt>> s1_, s2_;
};

// Shared read-only table, grown on demand. Superseded tables stay alive so
// references handed out earlier remain valid.
inline const StirlingTable& stirling_table(int at_least) {
    static std::mutex mu;
    static std::vector<std::unique_ptr<StirlingTable>> tables;
    std::lock_guard<std::mutex> lock(mu);
    if (tables.empty() || tables.back()->max_index() < at_least)
        tables.push_back(std::make_unique<StirlingTable>(std::max(at_least, 32)));
    return *tables.back();
}

inline BigInt stirling(StirlingKind kind, int n, int k) {
    if (n < 0 || k < 0 || k > n) throw DomainError("Stirling index out of range");
    const auto& t = stirling_table(n);
    return kind == StirlingKind::first ? t.first(n, k) : t.second(n, k);
}

inline Rational rpow(const Rational& x, int e) {
    Rational out = 1;
    for (int i = 0; i < e; ++i) out *= x;
    return out;
}

// P(i,j) = sum_{a=j}^{i} omega^a s(i,a) S(a,j).
inline Rational expansion_coefficient(const Rational& omega, int i, int j) {
    if (j > i) throw DomainError("expansion_coefficient needs j <= i");
    if (j < 0) throw DomainError("expansion_coefficient needs j >= 0");
    const auto& t = stirling_table(i);
    Rational sum = 0;
    for (int a = j; a <= i; ++a) sum += rpow(omega, a) * Rational(t.first(i, a) * t.second(a, j));
    return sum;
}

inline Rational factorial(int n) {
    Rational f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// Maps the differences d[i] = Delta^i on one lattice (i = 0..p) to the
// differences on the other: out[k] = sum_{i>=k} k!/i! P(i,k) d[i].
// omega = N goes from the fine to the slow lattice, omega = 1/N back.
inline std::vector<Rational> transform_differences(const std::vector<Rational>& d, const Rational& omega) {
    const int p = static_cast<int>(d.size()) - 1;
    std::vector<Rational> out(d.size());
    for (int k = 0; k <= p; ++k) {
        Rational acc = 0;
        for (int i = k; i <= p; ++i) acc += factorial(k) / factorial(i) * expansion_coefficient(omega, i, k) * d[i];
        out[k] = acc;
    }
    return out;
}

// Delta^i of values at index `at`, for i = 0..order.
template <class T>
std::vector<T> forward_differences(const std::vector<T>& values, std::size_t at, int order) {
    if (at + order >= values.size() + 0 && at + order > values.size() - 1)
        throw DomainError("sample too short for the requested differences");
    std::vector<T> row(values.begin() + at, values.begin() + at + order + 1);
    std::vector<T> out;
    for (int i = 0; i <= order; ++i) {
        out.push_back(row[0]);
        for (std::size_t j = 0; j + 1 < row.size(); ++j) row[j] = row[j + 1] - row[j];
        row.pop_back();
    }
    return out;
}

// Smallest p with Delta^{p+1} identically zero on the sample.
inline int slow_order(const std::vector<Rational>& values) {
    std::vector<Rational> row = values;
    for (int p = 0; p + 2 <= static_cast<int>(values.size()); ++p) {
        for (std::size_t j = 0; j + 1 < row.size(); ++j) row[j] = row[j + 1] - row[j];
        row.pop_back();
        if (std::all_of(row.begin(), row.end(), [](const Rational& r) { return r == 0; })) return p;
    }
    throw DomainError("order undetermined within the sample length");
}

inline int slow_order(const std::vector<double>& values, double tol) {
    std::vector<double> row = values;
    double scale = 0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    scale = std::max(scale, 1.0);
    for (int p = 0; p + 2 <= static_cast<int>(values.size()); ++p) {
        for (std::size_t j = 0; j + 1 < row.size(); ++j) row[j] = row[j + 1] - row[j];
        row.pop_back();
        if (std::all_of(row.begin(), row.end(), [&](double r) { return std::abs(r) <= tol * scale; })) return p;
    }
    throw DomainError("order undetermined within the sample length");
}

// Polynomial in (eps, M1, M2) with exact rational coefficients, eps = 1/N.
class SymCoef {
public:
    using Exponents = std::array<int, 3>;

    SymCoef() = default;
    static SymCoef term(const Rational& c, int eps_pow, int m1_pow = 0, int m2_pow = 0) {
        SymCoef s;
        if (c != 0) s.t_[{eps_pow, m1_pow, m2_pow}] = c;
        return s;
    }

    SymCoef& operator+=(const SymCoef& o) {
        for (const auto& [e, c] : o.t_) {
            auto& slot = t_[e];
            slot += c;
            if (slot == 0) t_.erase(e);
        }
        return *this;
    }
    friend SymCoef operator+(SymCoef a, const SymCoef& b) { return a += b; }
    friend SymCoef operator*(const SymCoef& a, const SymCoef& b) {
        SymCoef out;
        for (const auto& [ea, ca] : a.t_)
            for (const auto& [eb, cb] : b.t_) out += term(ca * cb, ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]);
        return out;
    }
    friend SymCoef operator*(const Rational& r, const SymCoef& a) { return term(r, 0) * a; }

    bool empty() const { return t_.empty(); }
    const std::map<Exponents, Rational>& terms() const { return t_; }

    // Part multiplying eps^k, as a polynomial in (M1, M2).
    SymCoef eps_part(int k) const {
        SymCoef out;
        for (const auto& [e, c] : t_)
            if (e[0] == k) out.t_[{0, e[1], e[2]}] = c;
        return out;
    }
    int max_eps() const {
        int m = -1;
        for (const auto& kv : t_) m = std::max(m, kv.first[0]);
        return m;
    }

    template <class V>
    V eval(const V& eps, const V& m1, const V& m2) const {
        V acc(0);
        for (const auto& [e, c] : t_) {
            V v = as_value<V>(c);
            for (int i = 0; i < e[0]; ++i) v = v * eps;
            for (int i = 0; i < e[1]; ++i) v = v * m1;
            for (int i = 0; i < e[2]; ++i) v = v * m2;
            acc = acc + v;
        }
        return acc;
    }
    Rational at(long long N, long long M1, long long M2) const {
        return eval<Rational>(make_rational(1, N), Rational(M1), Rational(M2));
    }

    std::string str() const {
        if (t_.empty()) return "0";
        std::string out;
        for (const auto& [e, c] : t_) {
            if (!out.empty()) out += " + ";
            out += "(" + to_string(c) + ")";
            if (e[0]) out += "*eps^" + std::to_string(e[0]);
            if (e[1]) out += "*M1^" + std::to_string(e[1]);
            if (e[2]) out += "*M2^" + std::to_string(e[2]);
        }
        return out;
    }

private:
    std::map<Exponents, Rational> t_;
};

// A fine-lattice shift written as a combination of slow-lattice samples.
struct StencilTerm {
    std::array<int, 3> shift{};
    SymCoef coef;
};

struct Stencil {
    std::string target;
    std::vector<std::string> axes;          // slow variables in use
    std::array<SymCoef, 3> displacement;    // the fine shift measured in slow units
    std::array<int, 3> declared_order{};    // slow order per axis the stencil assumes
    int truncation_order = 0;               // first dropped power of 1/N
    long long N = 0, M1 = 1, M2 = 1;        // concrete values used by apply()
    std::vector<StencilTerm> terms;

    void add(std::array<int, 3> s, const SymCoef& c) {
        for (auto& t : terms)
            if (t.shift == s) {
                t.coef += c;
                return;
            }
        terms.push_back({s, c});
    }
    void prune() {
        terms.erase(std::remove_if(terms.begin(), terms.end(), [](const StencilTerm& t) { return t.coef.empty(); }),
                    terms.end());
        std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.shift < b.shift; });
    }

    // Sum of coef * g(at + shift) at the stored (N, M1, M2).
    Rational apply(const std::function<Rational(const std::array<Rational, 3>&)>& g,
                   const std::array<Rational, 3>& at) const {
        if (N < 1) throw DomainError("stencil has no concrete N");
        Rational acc = 0;
        for (const auto& t : terms) {
            std::array<Rational, 3> x = at;
            for (int d = 0; d < 3; ++d) x[d] += t.shift[d];
            acc += t.coef.at(N, M1, M2) * g(x);
        }
        return acc;
    }
    // g evaluated at the exact image of the fine shift.
    Rational direct(const std::function<Rational(const std::array<Rational, 3>&)>& g,
                    const std::array<Rational, 3>& at) const {
        std::array<Rational, 3> x = at;
        for (int d = 0; d < 3; ++d) x[d] += displacement[d].at(N, M1, M2);
        return g(x);
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["target"] = target;
        j["axes"] = axes;
        j["truncation_order"] = truncation_order;
        j["declared_order"] = std::vector<int>(declared_order.begin(), declared_order.begin() + axes.size());
        auto arr = nlohmann::ordered_json::array();
        for (const auto& t : terms) {
            nlohmann::ordered_json tj;
            tj["shift"] = std::vector<int>(t.shift.begin(), t.shift.begin() + axes.size());
            auto parts = nlohmann::ordered_json::array();
            for (const auto& [e, c] : t.coef.terms())
                parts.push_back({{"eps", e[0]}, {"M1", e[1]}, {"M2", e[2]},
                                 {"num", boost::multiprecision::numerator(c).str()},
                                 {"den", boost::multiprecision::denominator(c).str()}});
            tj["coef"] = parts;
            if (N > 0) {
                Rational v = t.coef.at(N, M1, M2);
                tj["value"] = {{"num", boost::multiprecision::numerator(v).str()},
                               {"den", boost::multiprecision::denominator(v).str()}};
            }
            arr.push_back(tj);
        }
        j["terms"] = arr;
        return j;
    }
};

namespace detail {

inline Rational binom_int(int n, int k) {
    Rational r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

// binom(x, i) with x = c * eps * M1, as a polynomial in eps and M1.
inline SymCoef binom_scaled(const Rational& c, int i) {
    SymCoef x = SymCoef::term(c, 1, 1);
    SymCoef out = SymCoef::term(1, 0);
    for (int j = 0; j < i; ++j) out = out * (x + SymCoef::term(-j, 0));
    return (Rational(1) / factorial(i)) * out;
}

inline void check_positive_N(long long N) {
    if (N < 2) throw DomainError("N must be at least 2");
}

inline void check_divides(long long M, long long N, const char* what) {
    if (M == 0 || N % M != 0) throw DomainError(std::string(what) + " must divide " + std::to_string(N));
}

}  // namespace detail

// f_{n+dir} through g_{n1+j} for g slow of order p, n1 = M n / N.
inline Stencil one_scale_stencil(int p, long long N, long long M, bool symmetric, int dir = 1) {
    if (p < 1 || p > 3) throw DomainError("one-scale stencils exist for p in {1,2,3}");
    if (dir != 1 && dir != -1) throw DomainError("direction must be +1 or -1");
    if (symmetric && p % 2 == 1) throw DomainError("odd order cannot be expressed in a symmetric form");
    detail::check_positive_N(N);
    detail::check_divides(M, N, "M");
    Stencil s;
    s.target = dir > 0 ? "f_{n+1}" : "f_{n-1}";
    s.axes = {"n1"};
    s.displacement[0] = SymCoef::term(dir, 1, 1);
    s.declared_order = {p, 0, 0};
    s.truncation_order = p + 1;
    s.N = N;
    s.M1 = M;
    if (symmetric) {
        s.add({0, 0, 0}, SymCoef::term(1, 0));
        s.add({1, 0, 0}, SymCoef::term(make_rational(dir, 2), 1, 1) + SymCoef::term(make_rational(1, 2), 2, 2));
        s.add({-1, 0, 0}, SymCoef::term(make_rational(-dir, 2), 1, 1) + SymCoef::term(make_rational(1, 2), 2, 2));
        s.add({0, 0, 0}, SymCoef::term(-1, 2, 2));
    } else {
        // f_{n+dir} = sum_i binom(dir M/N, i) Delta^i g
        for (int i = 0; i <= p; ++i) {
            SymCoef b = detail::binom_scaled(dir, i);
            for (int j = 0; j <= i; ++j) {
                Rational w = detail::binom_int(i, j) * ((i - j) % 2 ? -1 : 1);
                s.add({j, 0, 0}, w * b);
            }
        }
    }
    s.prune();
    return s;
}

// f_{n+dir} for g(n1, n2), n1 = M1 n/N, n2 = M2 n/N^2, orders (2,2) or (2,1).
inline Stencil two_scale_stencil(long long N, long long M1, long long M2, std::array<int, 2> orders, int dir = 1) {
    detail::check_positive_N(N);
    detail::check_divides(M1, N, "M1");
    detail::check_divides(M2, N * N, "M2");
    if (dir != 1 && dir != -1) throw DomainError("direction must be +1 or -1");
    const bool full = orders == std::array<int, 2>{2, 2};
    if (!full && orders != std::array<int, 2>{2, 1}) throw DomainError("unsupported order pair");
    Stencil s;
    s.target = dir > 0 ? "f_{n+1}" : "f_{n-1}";
    s.axes = {"n1", "n2"};
    s.displacement[0] = SymCoef::term(dir, 1, 1);
    s.displacement[1] = SymCoef::term(dir, 2, 0, 1);
    s.declared_order = {orders[0], orders[1], 0};
    s.truncation_order = full ? 4 : 3;
    s.N = N;
    s.M1 = M1;
    s.M2 = M2;
    const Rational h = make_rational(1, 2);
    s.add({0, 0, 0}, SymCoef::term(1, 0));
    s.add({1, 0, 0}, SymCoef::term(dir * h, 1, 1) + SymCoef::term(h, 2, 2));
    s.add({-1, 0, 0}, SymCoef::term(-dir * h, 1, 1) + SymCoef::term(h, 2, 2));
    s.add({0, 0, 0}, SymCoef::term(-1, 2, 2));
    if (full) {
        s.add({0, 1, 0}, SymCoef::term(dir * h, 2, 0, 1));
        s.add({0, -1, 0}, SymCoef::term(-dir * h, 2, 0, 1));
        const Rational q = make_rational(1, 4);
        s.add({1, 1, 0}, SymCoef::term(q, 3, 1, 1));
        s.add({-1, -1, 0}, SymCoef::term(q, 3, 1, 1));
        s.add({1, -1, 0}, SymCoef::term(-q, 3, 1, 1));
        s.add({-1, 1, 0}, SymCoef::term(-q, 3, 1, 1));
    } else {
        s.add({0, dir, 0}, SymCoef::term(1, 2, 0, 1));
        s.add({0, 0, 0}, SymCoef::term(-1, 2, 0, 1));
    }
    s.prune();
    return s;
}

// f_{n+a,m+b} for g(n1, m1, m2), n1 = M1 n/N, m1 = M2 m/N, m2 = m/N^2,
// g of order 2 in n1 and m1 and of order 1 in m2. Truncated at N^-3.
inline Stencil shift_stencil(int a, int b) {
    Stencil s;
    s.target = "f_{n" + std::string(a >= 0 ? "+" : "") + std::to_string(a) + ",m" + (b >= 0 ? "+" : "") +
               std::to_string(b) + "}";
    s.axes = {"n1", "m1", "m2"};
    s.displacement[0] = SymCoef::term(a, 1, 1);
    s.displacement[1] = SymCoef::term(b, 1, 0, 1);
    s.displacement[2] = SymCoef::term(b, 2);
    s.declared_order = {2, 2, 1};
    s.truncation_order = 3;
    const Rational h = make_rational(1, 2);
    s.add({0, 0, 0}, SymCoef::term(1, 0));
    if (a != 0) {
        s.add({1, 0, 0}, SymCoef::term(a * h, 1, 1) + SymCoef::term(a * a * h, 2, 2));
        s.add({-1, 0, 0}, SymCoef::term(-a * h, 1, 1) + SymCoef::term(a * a * h, 2, 2));
        s.add({0, 0, 0}, SymCoef::term(-a * a, 2, 2));
    }
    if (b != 0) {
        s.add({0, 1, 0}, SymCoef::term(b * h, 1, 0, 1) + SymCoef::term(b * b * h, 2, 0, 2));
        s.add({0, -1, 0}, SymCoef::term(-b * h, 1, 0, 1) + SymCoef::term(b * b * h, 2, 0, 2));
        s.add({0, 0, 0}, SymCoef::term(-b * b, 2, 0, 2));
        s.add({0, 0, 1}, SymCoef::term(b, 2));
        s.add({0, 0, 0}, SymCoef::term(-b, 2));
    }
    if (a != 0 && b != 0) {
        const Rational q = make_rational(a * b, 4);
        s.add({1, 1, 0}, SymCoef::term(q, 2, 1, 1));
        s.add({-1, -1, 0}, SymCoef::term(q, 2, 1, 1));
        s.add({1, -1, 0}, SymCoef::term(-q, 2, 1, 1));
        s.add({-1, 1, 0}, SymCoef::term(-q, 2, 1, 1));
    }
    s.prune();
    return s;
}

// The f_{n+1,m+1} expansion with concrete scales attached.
inline Stencil cross_shift_stencil(long long N, long long M1, long long M2) {
    detail::check_positive_N(N);
    Stencil s = shift_stencil(1, 1);
    s.N = N;
    s.M1 = M1;
    s.M2 = M2;
    return s;
}

}  // namespace dnls

#pragma once

// Scalar types shared by every module: exact rationals, a complex template
// that works over rationals as well as doubles, and the error hierarchy.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace dnls {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using cd = std::complex<double>;

// Exit-code classes of the command-line tool.
enum class ErrorKind { config = 2, inadmissible = 3, numerical = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
// Out-of-domain arguments and inadmissible or degenerate carriers.
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::inadmissible, w) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};

inline Rational make_rational(const BigInt& num, const BigInt& den) {
    if (den == 0) throw DomainError("zero denominator");
    return den < 0 ? Rational(BigInt(-num), BigInt(-den)) : Rational(num, den);
}
inline Rational make_rational(long long num, long long den = 1) { return make_rational(BigInt(num), BigInt(den)); }

inline bool is_integer(const Rational& r) { return boost::multiprecision::denominator(r) == 1; }

inline std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(r);
    if (boost::multiprecision::denominator(r) != 1) os << '/' << boost::multiprecision::denominator(r);
    return os.str();
}

// Parses "3", "-2/7" or a finite decimal such as "0.125" exactly.
namespace detail {

// Decimal integer with optional sign; leading zeros never switch the base.
inline BigInt parse_decimal(const std::string& s, const std::string& text) {
    std::size_t i = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
    if (i == s.size()) throw ConfigError("bad number '" + text + "'");
    BigInt v = 0;
    for (std::size_t j = i; j < s.size(); ++j) {
        if (s[j] < '0' || s[j] > '9') throw ConfigError("cannot parse rational '" + text + "'");
        v = v * 10 + (s[j] - '0');
    }
    return s[0] == '-' ? BigInt(-v) : v;
}

}  // namespace detail

inline Rational parse_rational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (c != ' ') s.push_back(c);
    if (s.empty()) throw ConfigError("empty rational");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        const BigInt num = detail::parse_decimal(s.substr(0, slash), text), den = detail::parse_decimal(s.substr(slash + 1), text);
        if (den == 0) throw ConfigError("zero denominator in '" + text + "'");
        return make_rational(num, den);
    }
    if (s.find_first_of("eE") != std::string::npos) throw ConfigError("exponent notation not accepted: '" + text + "'");
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(detail::parse_decimal(s, text));
    const std::string frac = s.substr(dot + 1);
    if (frac.find_first_of("+-") != std::string::npos) throw ConfigError("cannot parse rational '" + text + "'");
    std::string whole = s.substr(0, dot);
    if (whole.empty() || whole == "-" || whole == "+") whole += "0";
    if (frac.empty()) throw ConfigError("bad number '" + text + "'");
    const BigInt den = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(frac.size()));
    return make_rational(detail::parse_decimal(whole + frac, text), den);
}

template <class R>
R from_rational(const Rational& r) {
    if constexpr (std::is_same_v<R, Rational>)
        return r;
    else
        return static_cast<R>(r.template convert_to<long double>());
}

template <class R>
double to_double(const R& r) {
    if constexpr (std::is_same_v<R, Rational>)
        return r.template convert_to<double>();
    else
        return static_cast<double>(r);
}

// Complex numbers over an arbitrary field R (double or Rational).
template <class R>
struct Cx {
    R re{}, im{};

    Cx() = default;
    Cx(R r) : re(std::move(r)), im(0) {}
    Cx(R r, R i) : re(std::move(r)), im(std::move(i)) {}
    template <class I, std::enable_if_t<std::is_integral_v<I>, int> = 0>
    Cx(I r) : re(r), im(0) {}

    static Cx i() { return Cx(R(0), R(1)); }

    Cx operator-() const { return Cx(-re, -im); }
    Cx& operator+=(const Cx& o) { re += o.re; im += o.im; return *this; }
    Cx& operator-=(const Cx& o) { re -= o.re; im -= o.im; return *this; }
    Cx& operator*=(const Cx& o) {
        R r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = std::move(r);
        return *this;
    }
    Cx& operator/=(const Cx& o) {
        R d = o.re * o.re + o.im * o.im;
        if (d == R(0)) throw NumericalError("complex division by zero");
        R r = (re * o.re + im * o.im) / d;
        im = (im * o.re - re * o.im) / d;
        re = std::move(r);
        return *this;
    }
    friend Cx operator+(Cx a, const Cx& b) { return a += b; }
    friend Cx operator-(Cx a, const Cx& b) { return a -= b; }
    friend Cx operator*(Cx a, const Cx& b) { return a *= b; }
    friend Cx operator/(Cx a, const Cx& b) { return a /= b; }
    friend bool operator==(const Cx& a, const Cx& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const Cx& a, const Cx& b) { return !(a == b); }

    bool is_zero() const { return re == R(0) && im == R(0); }
    Cx conj() const { return Cx(re, -im); }
    R norm2() const { return re * re + im * im; }
    cd to_cd() const { return cd(to_double(re), to_double(im)); }
};

template <class R>
Cx<R> conj(const Cx<R>& a) { return a.conj(); }

template <class R>
Cx<R> ipow(Cx<R> base, long long e) {
    if (e < 0) return Cx<R>(R(1)) / ipow(base, -e);
    Cx<R> out(R(1));
    while (e) {
        if (e & 1) out *= base;
        base *= base;
        e >>= 1;
    }
    return out;
}

template <class R>
Cx<R> from_cd(const cd& c) {
    static_assert(!std::is_same_v<R, Rational>, "no exact image of a double");
    return Cx<R>(R(c.real()), R(c.imag()));
}

template <class R>
std::string to_string(const Cx<R>& c) {
    std::ostringstream os;
    if constexpr (std::is_same_v<R, Rational>)
        os << to_string(c.re) << (c.im < 0 ? " - " : " + ") << to_string(c.im < 0 ? Rational(-c.im) : c.im) << "i";
    else {
        os.precision(17);
        os << c.re << (c.im < 0 ? " - " : " + ") << std::abs(static_cast<double>(c.im)) << "i";
    }
    return os.str();
}

template <class T>
struct is_cx : std::false_type {};
template <class R>
struct is_cx<Cx<R>> : std::true_type {};

// Image of an exact rational in any scalar type used by the templates.
template <class V>
V as_value(const Rational& c) {
    if constexpr (std::is_same_v<V, Rational>)
        return c;
    else if constexpr (std::is_same_v<V, double>)
        return to_double(c);
    else if constexpr (std::is_same_v<V, cd>)
        return cd(to_double(c), 0.0);
    else {
        static_assert(is_cx<V>::value, "unsupported scalar");
        return V(from_rational<decltype(V{}.re)>(c));
    }
}

// Magnitude used for tolerance checks; exact values are converted.
template <class R>
double magnitude(const Cx<R>& c) { return std::abs(c.to_cd()); }

}  // namespace dnls

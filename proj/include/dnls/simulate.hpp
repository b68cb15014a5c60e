#pragma once

// Far-field validation: modulated-packet initial data, full lattice runs,
// envelope demodulation, reduced and semicontinuous envelope evolution and
// the eps-convergence experiment.

#include "core.hpp"
#include "models.hpp"
#include "reduction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dnls {

enum class Profile { sech, gaussian };

inline Profile parse_profile(const std::string& s) {
    if (s == "sech") return Profile::sech;
    if (s == "gaussian") return Profile::gaussian;
    throw ConfigError("unknown envelope profile '" + s + "'");
}

struct PacketSpec {
    Profile profile = Profile::sech;
    double amplitude = 0.2;
    double width = 32;        // slow n2 units
    double center = 0;        // slow n2 position
    long long N = 8;
    int harmonics = 2;        // highest carrier harmonic in the initial data
    bool include_mean = true; // eps^2 psi0 for models with a nonlocal coupling

    double eps() const { return 1.0 / double(N); }
    double envelope(double n2) const {
        const double x = (n2 - center) / width;
        return profile == Profile::sech ? amplitude / std::cosh(x) : amplitude * std::exp(-0.5 * x * x);
    }
    // Distance in slow units beyond which the profile is below 1e-8 of its peak.
    double support() const { return profile == Profile::sech ? width * 19.5 : width * 6.1; }
};

// Rows of a lattice field over the sites n = 0..width-1.
struct FieldGrid {
    long long n0 = 0;
    std::size_t width = 0;
    std::vector<long long> m;
    std::vector<std::vector<double>> rows;
    double min_denominator = 0;
    double max_residual = 0;

    const std::vector<double>& row(long long mm) const {
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] == mm) return rows[i];
        throw DomainError("row " + std::to_string(mm) + " was not kept");
    }
};

// Carrier data used to build and demodulate fields.
struct SimCarrier {
    cd z, Omega;
    double k = 0;
    double M1 = 0, M2 = 0;
    long long N = 8;
    double background = 0;

    double eps() const { return 1.0 / double(N); }
    double slow_position(double n, double m) const { return (M1 * n - M2 * m) / double(N); }
    double fine_position(double n2, double m) const { return (double(N) * n2 + M2 * m) / M1; }
    cd E(long long n, long long m, int s = 1) const {
        return std::pow(z, double(s) * double(n)) * std::pow(Omega, double(s) * double(m));
    }
};

inline SimCarrier make_sim_carrier(const LatticeModel& model, const ReducedEquation& red, long long N) {
    const CarrierWave cw = model.dispersion(red.k);
    SimCarrier c;
    c.z = cw.z;
    c.Omega = cw.Omega;
    c.k = red.k;
    c.M1 = red.M1;
    c.M2 = red.M2;
    c.N = N;
    c.background = to_double(model.background());
    return c;
}

// psi0 from its first-difference relation with both summation constants zero,
// accumulated from the right edge. index0 is the global n2 of phi[0].
inline std::vector<cd> mean_field(const std::vector<cd>& phi, cd p2, long long index0 = 0) {
    const std::size_t L = phi.size();
    std::vector<cd> out(L, cd(0, 0));
    cd acc(0, 0);
    auto sign = [&](std::size_t i) { return ((index0 + (long long)i) % 2 == 0) ? 1.0 : -1.0; };
    for (std::size_t i = L; i-- > 0;) {
        const cd next = i + 1 < L ? phi[i + 1] : cd(0, 0);
        acc += sign(i) * (std::conj(phi[i]) * next + phi[i] * std::conj(next));
        out[i] = sign(i) * p2 * acc;
    }
    return out;
}

// Row of initial data from the truncated ansatz, real by construction.
inline std::vector<double> ansatz_row(const SimCarrier& c, const PacketSpec& pk, const ReducedEquation& red,
                                      std::size_t L, long long m) {
    const double eps = c.eps();
    std::vector<cd> phi(L);
    for (std::size_t n = 0; n < L; ++n) phi[n] = pk.envelope(c.slow_position(double(n), double(m)));
    std::vector<double> u(L);
    std::vector<cd> mean;
    if (pk.harmonics >= 2 && pk.include_mean && red.coef.nonlocal) {
        // psi0 on the slow lattice, interpolated linearly to the fine sites
        const double lo = std::floor(std::min(c.slow_position(0, m), c.slow_position(double(L - 1), m))) - 2;
        const double hi = std::ceil(std::max(c.slow_position(0, m), c.slow_position(double(L - 1), m))) + 2;
        std::vector<cd> slow;
        for (double x = lo; x <= hi; x += 1) slow.push_back(pk.envelope(x));
        auto p0 = mean_field(slow, red.p2(), (long long)lo);
        mean.resize(L);
        for (std::size_t n = 0; n < L; ++n) {
            const double x = c.slow_position(double(n), double(m)) - lo;
            const std::size_t i = std::min<std::size_t>(std::size_t(std::floor(x)), p0.size() - 2);
            const double f = x - double(i);
            mean[n] = (1 - f) * p0[i] + f * p0[i + 1];
        }
    }
    for (std::size_t n = 0; n < L; ++n) {
        const cd E = c.E((long long)n, m);
        double v = c.background + 2 * eps * (phi[n] * E).real();
        if (pk.harmonics >= 2) {
            v += 2 * eps * eps * (red.p1() * phi[n] * phi[n] * E * E).real();
            if (!mean.empty()) v += eps * eps * mean[n].real();
        }
        u[n] = v;
    }
    return u;
}

struct InitialData {
    std::vector<double> row0, row1;  // row1 only for two-level schemes
};

inline InitialData make_initial(const LatticeModel& model, const SimCarrier& c, const PacketSpec& pk,
                                const ReducedEquation& red, std::size_t L) {
    if (pk.amplitude < 0 || pk.width <= 0) throw DomainError("packet needs width > 0 and amplitude >= 0");
    if (c.eps() * pk.amplitude > 0.2) throw DomainError("eps * amplitude exceeds 0.2: outside the perturbative regime");
    const double a = c.slow_position(0, 0), b = c.slow_position(double(L - 1), 0);
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (pk.amplitude > 0 && (pk.center - pk.support() < lo || pk.center + pk.support() > hi))
        throw DomainError("window too small for the packet");
    InitialData d;
    d.row0 = ansatz_row(c, pk, red, L, 0);
    if (!model.is_quad()) d.row1 = ansatz_row(c, pk, red, L, 1);
    return d;
}

struct RunOptions {
    long long m_steps = 0;
    std::vector<long long> keep;  // rows to keep; empty keeps all
    bool linear = false;          // drop the nonlinear terms
    double delta_sing = 1e-12;
    double edge_tolerance = 1e-6;
};

// March direction: the fixed background column sits upstream of the packet.
inline QuadSolve march_direction(double group_velocity) {
    return group_velocity < 0 ? QuadSolve::up_left : QuadSolve::up_right;
}

inline FieldGrid run_full(const LatticeModel& model, const InitialData& init, double group_velocity, const RunOptions& opt) {
    const std::size_t L = init.row0.size();
    const double b = to_double(model.background());
    std::set<long long> keep(opt.keep.begin(), opt.keep.end());
    FieldGrid g;
    g.width = L;
    g.min_denominator = INFINITY;
    auto store = [&](long long m, const std::vector<double>& r) {
        if (keep.empty() || keep.count(m)) {
            g.m.push_back(m);
            g.rows.push_back(r);
        }
    };
    auto edge_check = [&](const std::vector<double>& r, long long m) {
        for (std::size_t i = 0; i < std::min<std::size_t>(10, L); ++i)
            if (std::abs(r[i] - b) > opt.edge_tolerance || std::abs(r[L - 1 - i] - b) > opt.edge_tolerance)
                throw NumericalError("packet reached the window boundary at row " + std::to_string(m));
    };
    LatticeModel lin = model;
    if (!model.is_quad()) {
        if (init.row1.size() != L) throw DomainError("two-level scheme needs rows 0 and 1");
        std::vector<double> prev = init.row0, cur = init.row1;
        store(0, prev);
        store(1, cur);
        for (long long m = 1; m < opt.m_steps; ++m) {
            auto next = model.step_nikdv(cur, prev);
            prev = std::move(cur);
            cur = std::move(next);
            store(m + 1, cur);
            if ((m & 63) == 0) edge_check(cur, m + 1);
        }
        return g;
    }
    const auto& P = opt.linear ? model.linear_part() : model.polynomial();
    // Flattened polynomial for speed; linear runs act on deviations.
    struct T {
        double c;
        std::vector<int> idx;
    };
    std::vector<T> terms;
    for (const auto& [mono, c] : P.terms()) terms.push_back({to_double(c), mono});
    const double shift = opt.linear ? b : 0.0;
    auto F = [&](double u, double u10, double u01, double u11) {
        const double v[4] = {u - shift, u10 - shift, u01 - shift, u11 - shift};
        double acc = 0;
        for (const auto& t : terms) {
            double x = t.c;
            for (int i : t.idx) x *= v[i];
            acc += x;
        }
        return acc;
    };
    const QuadSolve dir = march_direction(group_velocity);
    std::vector<double> cur = init.row0, next(L);
    store(0, cur);
    for (long long m = 0; m < opt.m_steps; ++m) {
        if (dir == QuadSolve::up_left) {
            next[L - 1] = b;
            for (std::size_t j = L - 1; j-- > 0;) {
                const double u = cur[j], u10 = cur[j + 1], u11 = next[j + 1];
                const double f0 = F(u, u10, 0.0, u11), f1 = F(u, u10, 1.0, u11), s = f1 - f0;
                const double scale = std::max({1.0, std::abs(u), std::abs(u10), std::abs(u11)});
                g.min_denominator = std::min(g.min_denominator, std::abs(s));
                if (std::abs(s) < opt.delta_sing * scale)
                    throw NumericalError("singular quad solve at n=" + std::to_string(j) + ", m=" + std::to_string(m + 1));
                next[j] = -f0 / s;
                g.max_residual = std::max(g.max_residual, std::abs(F(u, u10, next[j], u11)) / scale);
            }
        } else {
            next[0] = b;
            for (std::size_t j = 1; j < L; ++j) {
                const double u = cur[j - 1], u10 = cur[j], u01 = next[j - 1];
                const double f0 = F(u, u10, u01, 0.0), f1 = F(u, u10, u01, 1.0), s = f1 - f0;
                const double scale = std::max({1.0, std::abs(u), std::abs(u10), std::abs(u01)});
                g.min_denominator = std::min(g.min_denominator, std::abs(s));
                if (std::abs(s) < opt.delta_sing * scale)
                    throw NumericalError("singular quad solve at n=" + std::to_string(j) + ", m=" + std::to_string(m + 1));
                next[j] = -f0 / s;
                g.max_residual = std::max(g.max_residual, std::abs(F(u, u10, u01, next[j])) / scale);
            }
        }
        std::swap(cur, next);
        store(m + 1, cur);
        if ((m & 63) == 0 || m + 1 == opt.m_steps) edge_check(cur, m + 1);
    }
    return g;
}

// Complex linear march used to check plane-wave exactness.
inline std::vector<std::vector<cd>> march_linear(const LatticeModel& model, const std::vector<cd>& row0,
                                                 long long steps, QuadSolve dir,
                                                 const std::function<cd(long long n, long long m)>& boundary) {
    if (!model.is_quad()) throw DomainError("march_linear needs a quad model");
    const CornerPoly lin = model.linear_part();
    double a[4];
    for (int i = 0; i < 4; ++i) a[i] = to_double(lin.linear_coefficient(i));
    const std::size_t L = row0.size();
    std::vector<std::vector<cd>> rows{row0};
    for (long long m = 0; m < steps; ++m) {
        const auto& cur = rows.back();
        std::vector<cd> next(L);
        if (dir == QuadSolve::up_left) {
            next[L - 1] = boundary((long long)L - 1, m + 1);
            for (std::size_t j = L - 1; j-- > 0;) next[j] = -(a[0] * cur[j] + a[1] * cur[j + 1] + a[3] * next[j + 1]) / a[2];
        } else {
            next[0] = boundary(0, m + 1);
            for (std::size_t j = 1; j < L; ++j) next[j] = -(a[0] * cur[j - 1] + a[1] * cur[j] + a[2] * next[j - 1]) / a[3];
        }
        rows.push_back(std::move(next));
    }
    return rows;
}

enum class Sampling { lagrange, nearest };

struct DemodOptions {
    int passes = 3;      // box applications; 1 is the plain one-wavelength average
    int window = 0;      // sites per box, 0 picks the rounded carrier wavelength
    Sampling sampling = Sampling::lagrange;
};

// Band-limited complex amplitude of harmonic s on one row, as a function of
// the real fine-lattice position.
class DemodulatedRow {
public:
    DemodulatedRow(const std::vector<double>& row, const SimCarrier& c, long long m, int s, const DemodOptions& opt)
        : sampling_(opt.sampling) {
        if (opt.passes < 1) throw DomainError("demodulation needs at least one box pass");
        int W = opt.window;
        if (W == 0) {
            if (std::abs(c.k) < 1e-12) throw DomainError("carrier k = 0 cannot be demodulated");
            W = int(std::lround(2 * std::numbers::pi / std::abs(c.k)));
        }
        if (W < 2) throw DomainError("carrier too short for the averaging window (< 2 sites per wavelength)");
        const std::size_t L = row.size();
        const double scale = std::pow(c.eps(), s);
        std::vector<cd> a(L);
        for (std::size_t n = 0; n < L; ++n) a[n] = (row[n] - c.background) * std::conj(c.E((long long)n, m, s)) / scale;
        std::vector<double> w{1.0};
        for (int p = 0; p < opt.passes; ++p) {
            std::vector<double> nw(w.size() + W - 1, 0.0);
            for (std::size_t i = 0; i < w.size(); ++i)
                for (int j = 0; j < W; ++j) nw[i + j] += w[i] / W;
            w = std::move(nw);
        }
        const std::size_t K = w.size();
        if (L < K) throw DomainError("row shorter than the demodulation window");
        // valid part of the convolution; entry i is centred at i + (K-1)/2
        vals_.resize(L - K + 1);
        for (std::size_t i = 0; i + K <= L; ++i) {
            cd acc(0, 0);
            for (std::size_t t = 0; t < K; ++t) acc += w[t] * a[i + t];
            vals_[i] = acc;
        }
        offset_ = 0.5 * double(K - 1);
    }

    // Valid fine positions [lo, hi].
    double lo() const { return offset_ + 2; }
    double hi() const { return offset_ + double(vals_.size()) - 4; }
    bool valid(double x) const { return x >= lo() && x <= hi(); }

    cd at(double x) const {
        const double y = x - offset_;
        if (sampling_ == Sampling::nearest) {
            long long i = std::llround(y);
            i = std::clamp<long long>(i, 0, (long long)vals_.size() - 1);
            return vals_[std::size_t(i)];
        }
        const long long j0 = (long long)std::floor(y) - 2;
        if (j0 < 0 || j0 + 5 >= (long long)vals_.size()) throw DomainError("sample outside the demodulated range");
        cd acc(0, 0);
        for (int j = 0; j < 6; ++j) {
            double l = 1;
            for (int t = 0; t < 6; ++t)
                if (t != j) l *= (y - double(j0 + t)) / double(j - t);
            acc += l * vals_[std::size_t(j0 + j)];
        }
        return acc;
    }

private:
    Sampling sampling_;
    std::vector<cd> vals_;
    double offset_ = 0;
};

struct EnvelopeHistory {
    std::string source;  // demodulated | reduced | semicontinuous
    double m2 = 0;
    long long n2_first = 0;
    std::vector<cd> phi;  // phi[i] at n2 = n2_first + i

    long long n2_last() const { return n2_first + (long long)phi.size() - 1; }
    double max_abs() const {
        double m = 0;
        for (auto v : phi) m = std::max(m, std::abs(v));
        return m;
    }
};

// Envelope on the slow lattice n2 at row m.
inline EnvelopeHistory demodulate(const std::vector<double>& row, long long m, const SimCarrier& c,
                                  const DemodOptions& opt = {}) {
    DemodulatedRow d(row, c, m, 1, opt);
    const double x0 = c.slow_position(d.lo(), double(m)), x1 = c.slow_position(d.hi(), double(m));
    const long long lo = (long long)std::ceil(std::min(x0, x1)), hi = (long long)std::floor(std::max(x0, x1));
    EnvelopeHistory h;
    h.source = "demodulated";
    h.m2 = double(m) / double(c.N * c.N);
    h.n2_first = lo;
    for (long long n2 = lo; n2 <= hi; ++n2) {
        const double x = c.fine_position(double(n2), double(m));
        if (!d.valid(x)) throw DomainError("slow sample outside the valid demodulation range");
        h.phi.push_back(d.at(x));
    }
    return h;
}

struct ReducedCoefficients {
    cd c1, c2, cubic, c_psi0, p2;
    bool nonlocal = false;

    static ReducedCoefficients from(const ReducedEquation& r) {
        return {r.c1(), r.c2(), r.cubic(), r.c_psi0(), r.p2(), r.coef.nonlocal};
    }
};

// Bracket of the reduced equation: c1 d2 + c2 d1 + cubic |phi|^2 phi + c_psi0 psi0 phi.
inline std::vector<cd> reduced_bracket(const ReducedCoefficients& r, const std::vector<cd>& f, long long n2_first) {
    const std::size_t L = f.size();
    auto at = [&](long long i) { return (i < 0 || i >= (long long)L) ? cd(0, 0) : f[std::size_t(i)]; };
    std::vector<cd> psi0;
    if (r.nonlocal) psi0 = mean_field(f, r.p2, n2_first);
    std::vector<cd> out(L);
    for (std::size_t n = 0; n < L; ++n) {
        const long long i = (long long)n;
        const cd d2 = at(i + 2) + at(i - 2) - 2.0 * f[n];
        const cd d1 = at(i + 1) + at(i - 1) - 2.0 * f[n];
        cd v = r.c1 * d2 + r.c2 * d1 + r.cubic * std::norm(f[n]) * f[n];
        if (r.nonlocal) v += r.c_psi0 * psi0[n] * f[n];
        out[n] = v;
    }
    return out;
}

// phi_{m2+1} = phi - bracket(phi), zero outside the sampled range.
inline EnvelopeHistory run_reduced(const ReducedCoefficients& r, const EnvelopeHistory& phi0, long long steps) {
    EnvelopeHistory h = phi0;
    h.source = "reduced";
    const double start = std::max(phi0.max_abs(), 1e-300);
    for (long long s = 0; s < steps; ++s) {
        auto br = reduced_bracket(r, h.phi, h.n2_first);
        for (std::size_t i = 0; i < h.phi.size(); ++i) h.phi[i] -= br[i];
        h.m2 += 1;
        const double mx = h.max_abs();
        if (!std::isfinite(mx) || (phi0.max_abs() > 0 && mx > 1e3 * start))
            throw NumericalError("reduced map blew up at step " + std::to_string(s + 1));
    }
    return h;
}

// i dphi/dt = C1 d2 + C2 d1 + C3 |phi|^2 phi (+ psi0 term), classical RK4.
inline EnvelopeHistory run_semicontinuous(const ReducedCoefficients& r, const EnvelopeHistory& phi0, double t_end,
                                          double dt, double halving_tolerance = 1e-6) {
    if (dt <= 0 || t_end < 0) throw DomainError("semicontinuous run needs dt > 0 and t_end >= 0");
    auto integrate = [&](double h) {
        std::vector<cd> f = phi0.phi;
        const long long steps = (long long)std::llround(t_end / h);
        auto rhs = [&](const std::vector<cd>& x) {
            auto br = reduced_bracket(r, x, phi0.n2_first);
            for (auto& v : br) v = -v;
            return br;
        };
        auto axpy = [](const std::vector<cd>& x, double a, const std::vector<cd>& y) {
            std::vector<cd> o(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] + a * y[i];
            return o;
        };
        for (long long s = 0; s < steps; ++s) {
            auto k1 = rhs(f), k2 = rhs(axpy(f, h / 2, k1)), k3 = rhs(axpy(f, h / 2, k2)), k4 = rhs(axpy(f, h, k3));
            for (std::size_t i = 0; i < f.size(); ++i) f[i] += h / 6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        return f;
    };
    auto a = integrate(dt);
    if (halving_tolerance > 0) {
        auto b = integrate(dt / 2);
        double d = 0, m = 1e-300;
        for (std::size_t i = 0; i < a.size(); ++i) {
            d = std::max(d, std::abs(a[i] - b[i]));
            m = std::max(m, std::abs(b[i]));
        }
        if (!std::isfinite(d) || d > halving_tolerance * m)
            throw NumericalError("semicontinuous run unstable: step-halving disagreement " + std::to_string(d / m));
    }
    EnvelopeHistory h = phi0;
    h.source = "semicontinuous";
    h.phi = std::move(a);
    h.m2 = phi0.m2 + t_end;
    return h;
}

// max |a - b| / max |b| over the common n2 range.
inline double relative_sup_error(const EnvelopeHistory& a, const EnvelopeHistory& b) {
    const long long lo = std::max(a.n2_first, b.n2_first), hi = std::min(a.n2_last(), b.n2_last());
    if (hi < lo) throw DomainError("envelopes do not overlap");
    double d = 0, m = 0;
    for (long long n = lo; n <= hi; ++n) {
        const cd x = a.phi[std::size_t(n - a.n2_first)], y = b.phi[std::size_t(n - b.n2_first)];
        d = std::max(d, std::abs(x - y));
        m = std::max(m, std::abs(y));
    }
    return m > 0 ? d / m : d;
}

// Second-harmonic amplitude psi2 at fine positions. When 4k = 0 mod 2 pi
// the bands +2k and -2k coincide and rows m and m+1 are solved jointly.
struct SecondHarmonic {
    std::vector<double> x;
    std::vector<cd> psi2;
    bool two_row = false;
};

inline bool second_harmonic_aliased(double k) {
    const double r = std::remainder(4 * k, 2 * std::numbers::pi);
    return std::abs(r) < 1e-9;
}

inline SecondHarmonic second_harmonic(const std::vector<double>& row_m, const std::vector<double>* row_m1, long long m,
                                      const SimCarrier& c, const DemodOptions& opt = {}) {
    SecondHarmonic out;
    DemodulatedRow h0(row_m, c, m, 2, opt);
    out.two_row = second_harmonic_aliased(c.k);
    if (out.two_row && !row_m1) throw DomainError("aliased second harmonic needs row m+1");
    std::optional<DemodulatedRow> h1;
    if (out.two_row) h1.emplace(*row_m1, c, m + 1, 2, opt);
    const cd w0 = std::pow(std::conj(c.Omega), 4.0 * double(m)), w1 = std::pow(std::conj(c.Omega), 4.0 * double(m + 1));
    if (out.two_row && std::abs(w1 - w0) < 1e-6) throw DomainError("two-row solve is singular for this carrier");
    for (double x = std::ceil(h0.lo()); x <= std::floor(h0.hi()); x += 1) {
        if (out.two_row && !h1->valid(x)) continue;
        cd X = h0.at(x);
        if (out.two_row) {
            const cd a = h0.at(x), b = h1->at(x);
            const cd Xc = (b - a) / (w1 - w0);
            X = a - Xc * w0;
        }
        out.x.push_back(x);
        out.psi2.push_back(X);
    }
    return out;
}

struct SecondHarmonicCheck {
    double relative_l2 = 0;   // || |psi2| - |p1| |phi|^2 || / || |p1| |phi|^2 || on the packet core
    double amplitude_ratio = 0;
    bool two_row = false;
};

inline SecondHarmonicCheck check_second_harmonic(const std::vector<double>& row_m, const std::vector<double>& row_m1,
                                                 long long m, const SimCarrier& c, cd p1, const DemodOptions& opt = {},
                                                 double mask_fraction = 0.05) {
    SecondHarmonic sh = second_harmonic(row_m, &row_m1, m, c, opt);
    DemodulatedRow first(row_m, c, m, 1, opt);
    std::vector<double> ref(sh.x.size()), got(sh.x.size());
    double rmax = 0;
    for (std::size_t i = 0; i < sh.x.size(); ++i) {
        const cd phi = first.valid(sh.x[i]) ? first.at(sh.x[i]) : cd(0, 0);
        ref[i] = std::abs(p1) * std::norm(phi);
        got[i] = std::abs(sh.psi2[i]);
        rmax = std::max(rmax, ref[i]);
    }
    double num = 0, den = 0, ga = 0, ra = 0;
    for (std::size_t i = 0; i < ref.size(); ++i)
        if (ref[i] > mask_fraction * rmax) {
            num += (got[i] - ref[i]) * (got[i] - ref[i]);
            den += ref[i] * ref[i];
            ga = std::max(ga, got[i]);
            ra = std::max(ra, ref[i]);
        }
    SecondHarmonicCheck r;
    r.two_row = sh.two_row;
    r.relative_l2 = den > 0 ? std::sqrt(num / den) : 0;
    r.amplitude_ratio = ra > 0 ? ga / ra : 0;
    return r;
}

struct FarFieldRun {
    long long N = 0;
    double eps = 0;
    long long rows = 0;
    std::size_t width = 0;
    double error = 0;               // reduced map vs demodulated
    double error_semicontinuous = 0;
    double second_harmonic_error = 0;
    double max_residual = 0;
    double min_denominator = 0;
    EnvelopeHistory initial, measured, reduced, semicontinuous;
};

struct FarFieldReport {
    std::vector<FarFieldRun> runs;
    std::vector<double> ratios;     // E(eps_i)/E(eps_{i+1})
    std::optional<double> control_error;  // small-amplitude control at the first eps
};

struct FarFieldConfig {
    PacketSpec packet;
    long long slow_time = 5;
    DemodOptions demod;
    double semicontinuous_dt = 0.01;
    bool control = true;
    double control_scale = 1e-3;
    bool linear = false;  // linearized full model (use with a cubic-free reduced equation)
};

// One eps of the far-field experiment.
inline FarFieldRun far_field_run(const LatticeModel& model, const ReducedEquation& red, long long N,
                                 const FarFieldConfig& cfg, double amplitude) {
    if (!model.is_quad()) throw DomainError("far-field validation is implemented for the quad models");
    SimCarrier c = make_sim_carrier(model, red, N);
    PacketSpec pk = cfg.packet;
    pk.N = N;
    pk.amplitude = amplitude;
    if (cfg.linear) pk.harmonics = 1;
    const long long rows = cfg.slow_time * N * N;
    const double vg = c.M2 / c.M1;
    const double drift = std::abs(vg) * double(rows);
    const long long half = (long long)(pk.support() * 22.0 / 19.5 * double(N) / std::abs(c.M1)) + 10;
    const std::size_t L = std::size_t(drift + 2.0 * double(half) + 20.0);
    const long long nc = vg < 0 ? (long long)L - half - 10 : half + 10;
    pk.center = std::round(c.slow_position(double(nc), 0));
    InitialData init = make_initial(model, c, pk, red, L);
    RunOptions ro;
    ro.m_steps = rows + 1;
    ro.keep = {0, rows, rows + 1};
    ro.linear = cfg.linear;
    FieldGrid g = run_full(model, init, vg, ro);

    FarFieldRun out;
    out.N = N;
    out.eps = c.eps();
    out.rows = rows;
    out.width = L;
    out.max_residual = g.max_residual;
    out.min_denominator = g.min_denominator;
    out.initial = demodulate(g.row(0), 0, c, cfg.demod);
    out.measured = demodulate(g.row(rows), rows, c, cfg.demod);
    ReducedCoefficients rc = ReducedCoefficients::from(red);
    if (cfg.linear) {
        rc.cubic = 0;
        rc.c_psi0 = 0;
        rc.nonlocal = false;
    }
    out.reduced = run_reduced(rc, out.initial, cfg.slow_time);
    out.error = relative_sup_error(out.reduced, out.measured);
    if (cfg.semicontinuous_dt > 0) {
        out.semicontinuous = run_semicontinuous(rc, out.initial, double(cfg.slow_time), cfg.semicontinuous_dt, 0);
        out.error_semicontinuous = relative_sup_error(out.semicontinuous, out.measured);
    }
    if (amplitude > 0 && !cfg.linear)
        out.second_harmonic_error =
            check_second_harmonic(g.row(rows), g.row(rows + 1), rows, c, red.p1(), cfg.demod).relative_l2;
    return out;
}

inline FarFieldReport validate_far_field(const LatticeModel& model, const ReducedEquation& red,
                                         const std::vector<long long>& Ns, const FarFieldConfig& cfg) {
    FarFieldReport rep;
    for (long long N : Ns) {
        try {
            rep.runs.push_back(far_field_run(model, red, N, cfg, cfg.packet.amplitude));
        } catch (const Error& e) {
            throw Error(e.kind(), "far-field run at N=" + std::to_string(N) + ": " + e.what());
        }
    }
    for (std::size_t i = 0; i + 1 < rep.runs.size(); ++i)
        rep.ratios.push_back(rep.runs[i].error / rep.runs[i + 1].error);
    if (cfg.control && !Ns.empty()) {
        FarFieldConfig cc = cfg;
        cc.semicontinuous_dt = 0;
        rep.control_error = far_field_run(model, red, Ns.front(), cc, cfg.packet.amplitude * cfg.control_scale).error;
    }
    return rep;
}

inline FarFieldReport validate_far_field(const LatticeModel& model, const Wavenumber& w, long long M2,
                                         const std::vector<long long>& Ns, const FarFieldConfig& cfg) {
    return validate_far_field(model, reduce_closed(model, w, M2), Ns, cfg);
}

}  // namespace dnls

#include <dnls/diffcalc.hpp>

#include <gtest/gtest.h>

#include <random>
#include <thread>

using namespace dnls;

namespace {

Rational horner(const std::vector<Rational>& c, const Rational& x) {
    Rational acc = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

}  // namespace

TEST(Stirling, KnownValues) {
    EXPECT_EQ(stirling(StirlingKind::first, 5, 2), BigInt(-50));
    EXPECT_EQ(stirling(StirlingKind::first, 4, 1), BigInt(-6));
    EXPECT_EQ(stirling(StirlingKind::second, 5, 2), BigInt(15));
    EXPECT_EQ(stirling(StirlingKind::second, 6, 3), BigInt(90));
    EXPECT_EQ(stirling(StirlingKind::first, 0, 0), BigInt(1));
    EXPECT_THROW(stirling(StirlingKind::second, 3, 4), DomainError);
}

TEST(Stirling, InverseMatrices) {
    // sum_a s(n,a) S(a,k) = delta_{nk}
    for (int n = 0; n <= 12; ++n)
        for (int k = 0; k <= n; ++k) {
            BigInt acc = 0;
            for (int a = k; a <= n; ++a) acc += stirling(StirlingKind::first, n, a) * stirling(StirlingKind::second, a, k);
            EXPECT_EQ(acc, BigInt(n == k ? 1 : 0)) << n << "," << k;
        }
}

TEST(Stirling, ConcurrentGrowthKeepsReferencesValid) {
    std::vector<std::thread> ts;
    std::vector<BigInt> out(8);
    for (int t = 0; t < 8; ++t)
        ts.emplace_back([t, &out] {
            const auto& tab = stirling_table(40 + 10 * t);
            out[t] = tab.second(30, 2);
        });
    for (auto& t : ts) t.join();
    for (const auto& v : out) EXPECT_EQ(v, out[0]);
}

TEST(ExpansionCoefficient, IdentityAtOmegaOneAndDomain) {
    for (int i = 0; i <= 6; ++i)
        for (int j = 0; j <= i; ++j) EXPECT_EQ(expansion_coefficient(1, i, j), Rational(i == j ? 1 : 0));
    EXPECT_EQ(expansion_coefficient(make_rational(1, 2), 2, 2), make_rational(1, 4));
    EXPECT_THROW(expansion_coefficient(2, 1, 2), DomainError);
    EXPECT_THROW(expansion_coefficient(2, 1, -1), DomainError);
}

TEST(DifferenceTransform, MapsFineToSlowDifferencesOfCubics) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> d(-5, 5);
    for (long long N : {2, 3, 7}) {
        std::vector<Rational> c{d(rng), d(rng), d(rng), 1};
        std::vector<Rational> fine, slow;
        for (int i = 0; i <= 3; ++i) {
            fine.push_back(horner(c, make_rational(i, N)));
            slow.push_back(horner(c, Rational(i)));
        }
        EXPECT_EQ(transform_differences(forward_differences(fine, 0, 3), Rational(N)), forward_differences(slow, 0, 3));
    }
}

TEST(SlowOrder, DetectsPolynomialDegree) {
    std::vector<Rational> v;
    for (int i = 0; i < 8; ++i) v.push_back(Rational(i * i - 3 * i + 1));
    EXPECT_EQ(slow_order(v), 2);
    std::vector<double> w;
    for (int i = 0; i < 8; ++i) w.push_back(0.5 * i * i * i + 1e-15);
    EXPECT_EQ(slow_order(w, 1e-9), 3);
    std::vector<Rational> e;
    for (int i = 0; i < 4; ++i) e.push_back(Rational(1) / Rational(i + 1));
    EXPECT_THROW(slow_order(e), DomainError);
}

TEST(OneScaleStencil, SymmetricSecondOrderCoefficients) {
    const Stencil s = one_scale_stencil(2, 8, 2, true, 1);
    // M/N = 1/4: g_{+1}: 1/8 + 1/32, g_{-1}: -1/8 + 1/32, g_0: 1 - 1/16
    std::map<int, Rational> expect{{1, make_rational(5, 32)}, {-1, make_rational(-3, 32)}, {0, make_rational(15, 16)}};
    ASSERT_EQ(s.terms.size(), 3u);
    for (const auto& t : s.terms) EXPECT_EQ(t.coef.at(8, 2, 1), expect.at(t.shift[0]));
}

TEST(OneScaleStencil, Preconditions) {
    EXPECT_THROW(one_scale_stencil(3, 8, 1, true), DomainError);
    EXPECT_THROW(one_scale_stencil(1, 8, 1, true), DomainError);
    EXPECT_THROW(one_scale_stencil(2, 8, 3, false), DomainError);
    EXPECT_THROW(one_scale_stencil(4, 8, 1, false), DomainError);
    EXPECT_THROW(one_scale_stencil(2, 1, 1, false), DomainError);
}

TEST(TwoScaleStencil, ExactOnAdmissiblePolynomials) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> d(-6, 6);
    for (int trial = 0; trial < 30; ++trial) {
        const Rational a = d(rng), b = d(rng), c = d(rng), e = d(rng), f = d(rng);
        auto g = [&](const std::array<Rational, 3>& x) { return a + b * x[0] + c * x[0] * x[0] + e * x[1] + f * x[0] * x[1]; };
        auto g21 = [&](const std::array<Rational, 3>& x) { return a + b * x[0] + c * x[0] * x[0] + e * x[1]; };
        const std::array<Rational, 3> at{make_rational(d(rng), 3), make_rational(d(rng), 7), 0};
        for (int dir : {1, -1}) {
            const Stencil full = two_scale_stencil(12, 3, 8, {2, 2}, dir);
            EXPECT_EQ(full.apply(g, at), full.direct(g, at));
            const Stencil half = two_scale_stencil(12, 3, 8, {2, 1}, dir);
            EXPECT_EQ(half.apply(g21, at), half.direct(g21, at));
        }
    }
    EXPECT_THROW(two_scale_stencil(12, 5, 8, {2, 2}), DomainError);
    EXPECT_THROW(two_scale_stencil(12, 3, 8, {1, 1}), DomainError);
}

TEST(ShiftStencil, ExactOnQuadraticsInTheFastSlowVariables) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> d(-5, 5);
    for (auto [a, b] : std::vector<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 1}, {-1, 0}, {0, -1}, {3, 0}, {-3, 0}}) {
        Stencil s = shift_stencil(a, b);
        s.N = 10;
        s.M1 = -5;
        s.M2 = 4;
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<Rational> c(7);
            for (auto& x : c) x = d(rng);
            auto g = [&](const std::array<Rational, 3>& x) {
                return c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[2] + c[4] * x[0] * x[0] + c[5] * x[1] * x[1] +
                       c[6] * x[0] * x[1];
            };
            const std::array<Rational, 3> at{d(rng), d(rng), d(rng)};
            EXPECT_EQ(s.apply(g, at), s.direct(g, at)) << s.target;
        }
    }
}

TEST(ShiftStencil, MixedTermAndJson) {
    const Stencil s = cross_shift_stencil(8, -5, 4);
    int mixed = 0;
    for (const auto& t : s.terms)
        if (t.shift[0] != 0 && t.shift[1] != 0) {
            ++mixed;
            EXPECT_EQ(abs(t.coef.at(8, -5, 4)), make_rational(20, 4 * 64));
        }
    EXPECT_EQ(mixed, 4);
    const auto j = s.to_json();
    EXPECT_EQ(j["axes"].size(), 3u);
    EXPECT_EQ(j["truncation_order"], 3);
    EXPECT_TRUE(j["terms"][0].contains("value"));
}

TEST(SymCoef, ArithmeticAndEvaluation) {
    const SymCoef x = SymCoef::term(2, 1, 1) + SymCoef::term(make_rational(1, 2), 2, 0, 2);
    const SymCoef y = x * x;
    EXPECT_EQ(y.max_eps(), 4);
    EXPECT_EQ(y.at(4, 3, 2), x.at(4, 3, 2) * x.at(4, 3, 2));
    EXPECT_EQ(x.eps_part(1).at(4, 3, 2), 6);
    EXPECT_FALSE(x.str().empty());
}

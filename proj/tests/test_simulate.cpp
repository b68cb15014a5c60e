#include <dnls/simulate.hpp>

#include <gtest/gtest.h>

#include <numbers>

using namespace dnls;

namespace {

const LatticeModel& bench_model() {
    static const LatticeModel m = LatticeModel::mkdv(2, 1);
    return m;
}

const ReducedEquation& bench() {
    static const ReducedEquation r = reduce_mkdv(2, 1, {0, 1}, 4);
    return r;
}

EnvelopeHistory constant_envelope(std::size_t L, cd v) {
    EnvelopeHistory h;
    h.source = "reduced";
    h.phi.assign(L, v);
    return h;
}

}  // namespace

TEST(Simulate, ZeroAmplitudeStaysOnTheBackground) {
    const SimCarrier c = make_sim_carrier(bench_model(), bench(), 8);
    PacketSpec pk;
    pk.amplitude = 0;
    const InitialData d = make_initial(bench_model(), c, pk, bench(), 64);
    for (double v : d.row0) EXPECT_EQ(v, 1.0);
    RunOptions ro;
    ro.m_steps = 50;
    const FieldGrid g = run_full(bench_model(), d, -0.8, ro);
    EXPECT_EQ(g.rows.size(), 51u);
    for (const auto& r : g.rows)
        for (double v : r) EXPECT_EQ(v, 1.0);
}

TEST(Simulate, InitialDataPreconditions) {
    const SimCarrier c = make_sim_carrier(bench_model(), bench(), 4);
    PacketSpec pk;
    pk.amplitude = 1.0;  // eps * A = 0.25
    EXPECT_THROW(make_initial(bench_model(), c, pk, bench(), 4096), DomainError);
    pk.amplitude = 0.2;
    EXPECT_THROW(make_initial(bench_model(), c, pk, bench(), 64), DomainError);
}

TEST(Simulate, FirstHarmonicInitialDataIsBounded) {
    const SimCarrier c = make_sim_carrier(bench_model(), bench(), 8);
    PacketSpec pk;
    pk.harmonics = 1;
    pk.width = 4;
    pk.N = 8;
    const std::size_t L = 600;
    pk.center = std::round(c.slow_position(300, 0));
    const InitialData d = make_initial(bench_model(), c, pk, bench(), L);
    for (double v : d.row0) EXPECT_LE(std::abs(v - 1.0), 2 * c.eps() * pk.amplitude + 1e-15);
}

TEST(Simulate, LinearMarchIsExactOnPlaneWaves) {
    const auto& m = bench_model();
    const double k = 0.7;
    const CarrierWave cw = m.dispersion(k);
    auto wave = [&](long long n, long long mm) { return std::pow(cw.z, double(n)) * std::pow(cw.Omega, double(mm)); };
    std::vector<cd> row0(40);
    for (std::size_t n = 0; n < row0.size(); ++n) row0[n] = wave((long long)n, 0);
    const auto rows = march_linear(m, row0, 100, QuadSolve::up_left, wave);
    double worst = 0;
    for (std::size_t mm = 0; mm < rows.size(); ++mm)
        for (std::size_t n = 0; n < rows[mm].size(); ++n)
            worst = std::max(worst, std::abs(rows[mm][n] - wave((long long)n, (long long)mm)));
    EXPECT_LT(worst, 1e-12);
}

TEST(Simulate, FullRunSatisfiesTheLatticeEquation) {
    const SimCarrier c = make_sim_carrier(bench_model(), bench(), 8);
    PacketSpec pk;
    pk.width = 4;
    const std::size_t L = 800;
    pk.center = std::round(c.slow_position(500, 0));
    const InitialData d = make_initial(bench_model(), c, pk, bench(), L);
    RunOptions ro;
    ro.m_steps = 64;
    ro.keep = {64};
    const FieldGrid g = run_full(bench_model(), d, -0.8, ro);
    EXPECT_LT(g.max_residual, 1e-12);
    EXPECT_GT(g.min_denominator, 0.1);
    EXPECT_EQ(g.m, std::vector<long long>{64});
}

TEST(Simulate, DemodulationRecoversTheEnvelope) {
    const SimCarrier c = make_sim_carrier(bench_model(), bench(), 16);
    PacketSpec pk;
    pk.harmonics = 1;
    pk.width = 16;
    pk.N = 16;
    const std::size_t L = 2400;
    pk.center = std::round(c.slow_position(1200, 0));
    const InitialData d = make_initial(bench_model(), c, pk, bench(), L);
    const EnvelopeHistory h = demodulate(d.row0, 0, c);
    ASSERT_GT(h.phi.size(), 100u);
    double err = 0;
    for (std::size_t i = 0; i < h.phi.size(); ++i)
        err = std::max(err, std::abs(h.phi[i] - pk.envelope(double(h.n2_first + (long long)i))));
    EXPECT_LT(err / pk.amplitude, 5e-3);
}

TEST(Simulate, DemodulationRejectsShortCarriers) {
    SimCarrier c = make_sim_carrier(bench_model(), bench(), 8);
    c.k = 0;
    EXPECT_THROW(DemodulatedRow(std::vector<double>(100, 1.0), c, 0, 1, {}), DomainError);
    c.k = 1.0;
    DemodOptions one;
    one.window = 1;
    EXPECT_THROW(DemodulatedRow(std::vector<double>(100, 1.0), c, 0, 1, one), DomainError);
    EXPECT_THROW(DemodulatedRow(std::vector<double>(10, 1.0), c, 0, 1, {}), DomainError);
}

TEST(Simulate, ReducedMapActsOnAConstantByTheCubicTerm) {
    ReducedCoefficients rc{cd(0.3, 0.1), cd(-0.2, 0.4), cd(0, 0.5), 0, 0, false};
    const cd a(0.3, 0.1);
    const auto out = run_reduced(rc, constant_envelope(20, a), 1);
    // away from the zero padding the differences vanish
    for (std::size_t i = 2; i + 2 < 20; ++i) EXPECT_NEAR(std::abs(out.phi[i] - (a - rc.cubic * std::norm(a) * a)), 0, 1e-15);
    EXPECT_EQ(out.m2, 1.0);
}

TEST(Simulate, ReducedMapDetectsBlowUp) {
    ReducedCoefficients rc{0, cd(3, 0), 0, 0, 0, false};
    EnvelopeHistory h;
    for (int i = 0; i < 20; ++i) h.phi.push_back(i % 2 ? 0.01 : -0.01);
    EXPECT_THROW(run_reduced(rc, h, 10), NumericalError);
}

TEST(Simulate, SemicontinuousPhaseRotationAndFourthOrder) {
    ReducedCoefficients rc{0, 0, cd(0, 0.5), 0, 0, false};
    const cd a(0.8, 0.0);
    const double T = 4;
    const cd exact = a * std::exp(cd(0, -0.5 * std::norm(a) * T));
    const auto coarse = run_semicontinuous(rc, constant_envelope(3, a), T, 0.4, 0);
    const auto fine = run_semicontinuous(rc, constant_envelope(3, a), T, 0.2, 0);
    const double e1 = std::abs(coarse.phi[1] - exact), e2 = std::abs(fine.phi[1] - exact);
    EXPECT_NEAR(std::abs(fine.phi[1]), std::abs(a), 1e-6);
    EXPECT_NEAR(e1 / e2, 16.0, 1.0);
    EXPECT_NEAR(std::abs(run_semicontinuous(rc, constant_envelope(3, a), T, 0.01).phi[1] - exact), 0, 1e-10);
}

TEST(Simulate, SemicontinuousStepHalvingGuard) {
    ReducedCoefficients rc{0, cd(0, 5), 0, 0, 0, false};
    EnvelopeHistory h;
    for (int i = 0; i < 20; ++i) h.phi.push_back(i % 2 ? 0.1 : -0.1);
    EXPECT_THROW(run_semicontinuous(rc, h, 2, 0.5), NumericalError);
}

TEST(Simulate, ZeroEnvelopeIsAFixedPoint) {
    const ReducedCoefficients rc = ReducedCoefficients::from(reduce_hietarinta(2, 1, 3, {make_rational(3, 5), 1}, 35));
    const auto out = run_reduced(rc, constant_envelope(16, 0), 5);
    for (auto v : out.phi) EXPECT_EQ(v, cd(0, 0));
}

TEST(Simulate, MeanFieldSatisfiesItsDifferenceRelation) {
    std::vector<cd> phi;
    for (int i = 0; i < 12; ++i) phi.push_back(cd(std::sin(0.3 * i), 0.2 * std::cos(0.5 * i)));
    const cd p2(0.7, -0.1);
    for (long long index0 : {0LL, 3LL}) {
        const auto psi0 = mean_field(phi, p2, index0);
        for (std::size_t i = 0; i + 1 < phi.size(); ++i) {
            const cd t = std::conj(phi[i]) * phi[i + 1] + phi[i] * std::conj(phi[i + 1]);
            EXPECT_NEAR(std::abs(psi0[i] + psi0[i + 1] - p2 * t), 0, 1e-14);
        }
        EXPECT_NEAR(std::abs(psi0.back()), 0, 1e-15);
    }
}

TEST(Simulate, SecondHarmonicAliasing) {
    EXPECT_TRUE(second_harmonic_aliased(std::numbers::pi / 2));
    EXPECT_FALSE(second_harmonic_aliased(1.0));
}

TEST(Simulate, FarFieldSingleRun) {
    FarFieldConfig cfg;
    const FarFieldRun r = far_field_run(bench_model(), bench(), 8, cfg, cfg.packet.amplitude);
    EXPECT_EQ(r.rows, 5 * 64);
    EXPECT_LT(r.max_residual, 1e-12);
    EXPECT_LT(r.error, 0.02);
    EXPECT_LT(r.second_harmonic_error, 0.05);
    EXPECT_GT(r.measured.max_abs(), 0.5 * cfg.packet.amplitude);
}

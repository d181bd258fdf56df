#include <helix/gl_field.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace helix;

namespace
{

constexpr double pi = std::numbers::pi;

gl_params quiet_params(int m = 256, double length = 256.0)
{
    gl_params p;
    p.grid_points = m;
    p.domain_length = length;
    return p;
}

gl_field plane_wave(const gl_params& p, int mode, cplx amplitude, double growth = 0.0)
{
    gl_field f = gl_zero_field(p);
    for(std::size_t j = 0; j < f.size(); ++j)
    {
        const double x = static_cast<double>(j) * p.spacing();
        f.value[j] = amplitude * std::polar(1.0, two_pi * mode * x / p.domain_length);
        f.momentum[j] = growth * f.value[j];
    }
    return f;
}

} // namespace

TEST(GlParams, Validation)
{
    EXPECT_NO_THROW(gl_params{}.validate());
    gl_params p;
    p.h = 0.0;
    EXPECT_THROW(p.validate(), domain_error);
    p = {};
    p.grid_points = 4;
    EXPECT_THROW(p.validate(), domain_error);
    p = {};
    p.overdamped = true;
    p.eta = 0.0;
    EXPECT_THROW(p.validate(), domain_error);

    p = {};
    EXPECT_TRUE(p.resolves(-1.3848));
    p.domain_length = 1024.0; // spacing 4
    EXPECT_FALSE(p.resolves(-1.3848));
}

TEST(GlStep, ZeroFieldIsFixedPoint)
{
    const gl_params p = quiet_params(64, 64);
    gl_field f = gl_zero_field(p);
    gl_integrator integ(p, 0.05, 1);
    for(int k = 0; k < 500; ++k) integ.step(f, -1.0);
    for(std::size_t j = 0; j < f.size(); ++j)
    {
        EXPECT_EQ(f.value[j], cplx{});
        EXPECT_EQ(f.momentum[j], cplx{});
    }
}

TEST(GlStep, MexicanHatMinimumIsStationary)
{
    const gl_params p = quiet_params(64, 64);
    const double d = -1.3848;
    const cplx a0 = std::polar(std::sqrt(-d / p.g), 0.7);
    gl_field f = plane_wave(p, 0, a0);
    gl_integrator integ(p, 0.05, 1);
    for(int k = 0; k < 2000; ++k) integ.step(f, d);
    for(std::size_t j = 0; j < f.size(); ++j) EXPECT_LT(std::abs(f.value[j] - a0), 1e-12);
}

TEST(GlStep, LinearGrowthMatchesDispersion)
{
    const gl_params p = quiet_params();
    const double dt = 0.01;
    for(const auto& [d, mode] : {std::pair{-1.0, 0}, std::pair{-1.0, 3}, std::pair{-0.5, 5}, std::pair{-1.3848, 1}})
    {
        const double k = two_pi * mode / p.domain_length;
        const double rate = gl_dispersion(p, d, k).growth_rate();
        ASSERT_GT(rate, 0.0);
        // start on the growing eigenvector so the decaying root is not excited
        gl_field f = plane_wave(p, mode, 1e-6, rate);
        gl_integrator integ(p, dt, 1);
        const auto steps = static_cast<int>(std::ceil(5.0 / rate / dt));
        for(int s = 0; s < steps; ++s) integ.step(f, d);
        const double measured = std::log(std::abs(f.value[7]) / 1e-6) / (steps * dt);
        EXPECT_NEAR(measured, rate, 0.01 * rate) << "delta " << d << " mode " << mode;
    }
}

TEST(GlStep, OverdampedGrowth)
{
    gl_params p = quiet_params(64, 64);
    p.overdamped = true;
    const double d = -1.0, dt = 0.01, rate = -d / p.eta;
    gl_field f = plane_wave(p, 0, 1e-6);
    gl_integrator integ(p, dt, 1);
    const int steps = static_cast<int>(5.0 / rate / dt);
    for(int s = 0; s < steps; ++s) integ.step(f, d);
    EXPECT_NEAR(std::log(std::abs(f.value[0]) / 1e-6) / (steps * dt), rate, 0.01 * rate);
}

TEST(GlStep, StabilityBoundAndBlowup)
{
    const gl_params p = quiet_params(64, 64);
    gl_field f = gl_zero_field(p);
    gl_integrator big(p, 0.2, 1); // bound is min(1, 1/4.38, 1)/2
    EXPECT_THROW(big.step(f, -1.0), domain_error);

    gl_integrator integ(p, 0.05, 1);
    f.value[3] = 1e200;
    EXPECT_THROW(integ.step(f, -1.0), integration_blowup);
}

TEST(GlStep, EnergyIsLyapunovWithoutNoise)
{
    const gl_params p = quiet_params(128, 128);
    gl_field f = gl_zero_field(p);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 0.5);
    for(auto& a : f.value) a = {g(rng), g(rng)};
    const double d = -1.0, dt = 0.02;
    gl_integrator integ(p, dt, 1);
    double prev = gl_energy(f, p, d);
    for(int k = 0; k < 5000; ++k)
    {
        integ.step(f, d);
        const double e = gl_energy(f, p, d);
        EXPECT_LE(e, prev + dt * dt * 1e-3 * std::abs(prev)) << "step " << k;
        prev = e;
    }
}

TEST(GlStep, PhaseEquivariance)
{
    gl_params p = quiet_params(64, 64);
    p.noise_kT = 0.05;
    gl_field f0 = gl_zero_field(p);
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 0.3);
    for(auto& a : f0.value) a = {g(rng), g(rng)};

    const double phi = 1.234;
    const cplx rot = std::polar(1.0, phi);
    gl_field f1 = f0;
    for(auto& a : f1.value) a *= rot;

    gl_integrator a(p, 0.05, 17), b(p, 0.05, 17);
    b.set_noise_phase(phi);
    for(int k = 0; k < 200; ++k)
    {
        a.step(f0, -1.0);
        b.step(f1, -1.0);
    }
    for(std::size_t j = 0; j < f0.size(); ++j)
    {
        EXPECT_LT(std::abs(f0.value[j] * rot - f1.value[j]), 1e-11);
        EXPECT_LT(std::abs(f0.momentum[j] * rot - f1.momentum[j]), 1e-11);
    }
}

TEST(GlStep, NoiseObeysFluctuationDissipation)
{
    // stable phase: each cell has mass dx, so <|A_t|^2> = 2 kT / dx
    gl_params p = quiet_params(64, 32);
    p.noise_kT = 0.2;
    gl_field f = gl_zero_field(p);
    gl_integrator integ(p, 0.02, 3);
    for(int k = 0; k < 2000; ++k) integ.step(f, 1.0);
    double sum = 0.0;
    const int samples = 20000;
    for(int k = 0; k < samples; ++k)
    {
        integ.step(f, 1.0);
        for(const auto& v : f.momentum) sum += std::norm(v);
    }
    const double mean = sum / (samples * static_cast<double>(f.size()));
    EXPECT_NEAR(mean, 2.0 * p.noise_kT / p.spacing(), 0.05 * 2.0 * p.noise_kT / p.spacing());
}

TEST(GlDispersion, Examples)
{
    gl_params p;
    p.eta = 0.0;
    const auto stable = gl_dispersion(p, 2.0, 0.5);
    EXPECT_NEAR(stable.plus.real(), std::sqrt(2.25), 1e-14);
    EXPECT_NEAR(stable.minus.real(), -std::sqrt(2.25), 1e-14);
    EXPECT_EQ(stable.plus.imag(), 0.0);

    const auto unstable = gl_dispersion(p, -1.0, 0.0);
    EXPECT_NEAR(unstable.growth_rate(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(unstable.plus.real()) + std::abs(unstable.minus.real()), 0.0, 1e-15);

    p.eta = 4.38;
    EXPECT_NEAR(gl_dispersion(p, -1.0, 0.0).growth_rate(), 0.217509086171847, 1e-12);
}

TEST(GlDispersion, RootsSolveCharacteristicPolynomial)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for(int k = 0; k < 1000; ++k)
    {
        gl_params p;
        p.h = std::exp(0.3 * u(rng));
        p.eta = std::abs(u(rng));
        const double d = u(rng), q = u(rng);
        const auto r = gl_dispersion(p, d, q);
        for(cplx w : {r.plus, r.minus})
        {
            const cplx poly = w * w + cplx{0.0, p.eta} * w - (p.h * p.h * q * q + d);
            EXPECT_LT(std::abs(poly), 1e-12 * (1.0 + std::norm(w) + p.eta * std::abs(w) + std::abs(d) + q * q));
        }
    }
}

TEST(GlDispersion, StableSideDecays)
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.01, 5.0);
    for(int k = 0; k < 500; ++k)
    {
        gl_params p;
        p.eta = u(rng);
        const double d = u(rng);
        for(double q = -3.0; q <= 3.0; q += 0.25) EXPECT_LT(gl_dispersion(p, d, q).growth_rate(), 0.0);
    }
}

TEST(GlWinding, Examples)
{
    const gl_params p = quiet_params(256, 256);
    EXPECT_EQ(gl_winding(plane_wave(p, 1, 1.0)), 1);
    EXPECT_EQ(gl_winding(plane_wave(p, 0, cplx{0.3, 0.4})), 0);
    EXPECT_EQ(gl_winding(plane_wave(p, -4, 1.0)), -4);
}

TEST(GlQuench, NoNoiseStaysAtZero)
{
    gl_params p = quiet_params(64, 64);
    const quench_schedule q{2.54, 1.68, 100.0, 10.0, 20.0};
    const auto r = gl_quench_run(p, q, 0.05, 1, 20);
    EXPECT_EQ(r.final_winding, 0);
    ASSERT_FALSE(r.trace.empty());
    for(const auto& s : r.trace) EXPECT_EQ(s.max_abs_amplitude(), 0.0);
}

TEST(GlQuench, DeterministicPerSeed)
{
    gl_params p = quiet_params(64, 64);
    p.noise_kT = 0.05;
    const quench_schedule q{2.54, 1.68, 50.0, 10.0, 20.0};
    const auto a = gl_quench_run(p, q, 0.05, 5, 10);
    const auto b = gl_quench_run(p, q, 0.05, 5, 10);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for(std::size_t k = 0; k < a.trace.size(); ++k) EXPECT_EQ(a.trace[k].amplitude, b.trace[k].amplitude);
    EXPECT_EQ(a.final_winding, b.final_winding);
}

TEST(GlQuench, AdiabaticLimitLeavesNoWinding)
{
    gl_params p = quiet_params(16, 16);
    p.noise_kT = 0.01;
    const quench_schedule q{2.54, 1.68, 5000.0, 50.0, 200.0};
    int zero = 0;
    for(std::uint64_t seed = 1; seed <= 50; ++seed)
    {
        if(gl_quench_run(p, q, 0.05, seed, 4).final_winding == 0) ++zero;
    }
    EXPECT_GT(zero, 45);
}

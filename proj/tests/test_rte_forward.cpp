// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>

#include <doctest.h>

#include "adjmc/errors.hpp"
#include "adjmc/rte_forward.hpp"
#include "adjmc/stats.hpp"

using namespace adjmc;
using namespace adjmc::rte;

namespace {

constexpr std::uint64_t kSeed = 0x5eed0003ULL;

RteConfig study_config(long long n) {
    RteConfig c;
    c.t_final = 0.5;
    c.steps = 50;
    c.n_particles = n;
    return c;
}

SigmaField bump_sigma(int cells = 80) {
    return SigmaField::from_function(
        [](double x) { return 2.0 + 2.0 * std::exp(-4.0 * x * x); }, -2.0, 2.0, cells);
}

const InitialDistribution kF0 = InitialDistribution::gaussian_pair(0.5, 1.0 / (2.0 * std::sqrt(2.0)));

}  // namespace

TEST_CASE("initial sampling") {
    SUBCASE("two symmetric humps have zero mean in x, uniform v") {
        const RteConfig c = study_config(200000);
        const auto s = sample_initial(c, kF0, kSeed);
        MeanVar mx, mv;
        for (double x : s.x) mx.add(x);
        for (double v : s.v) mv.add(v);
        CHECK(std::abs(mx.mean) < 3.0 * mx.std_err());
        CHECK(std::abs(mv.mean) < 3.0 * mv.std_err());
    }
    SUBCASE("a tight single Gaussian stays within six widths") {
        RteConfig c = study_config(10000);
        InitialDistribution f0;
        f0.spatial = {{1.0, 0.25, 1e-3}};
        const auto s = sample_initial(c, f0, kSeed);
        for (double x : s.x) CHECK(std::abs(x - 0.25) < 6e-3);
    }
    SUBCASE("non-normalizable profiles are rejected") {
        InitialDistribution bad;
        bad.spatial = {{-1.0, 0.0, 1.0}};
        CHECK_THROWS_AS(sample_initial(study_config(10), bad, kSeed), std::invalid_argument);
        InitialDistribution zero_width;
        zero_width.spatial = {{1.0, 0.0, 0.0}};
        CHECK_THROWS_AS(sample_initial(study_config(10), zero_width, kSeed), std::invalid_argument);
        CHECK_THROWS_AS(sample_initial(study_config(10), InitialDistribution{}, kSeed),
                        std::invalid_argument);
    }
}

TEST_CASE("forward sweep scattering behavior") {
    SUBCASE("sigma = 0 never scatters and velocities persist") {
        const RteConfig c = study_config(5000);
        const auto sigma = SigmaField::from_function([](double) { return 0.0; }, -2, 2, 8);
        const auto s = sample_initial(c, kF0, kSeed);
        const auto tape = run_forward(c, sigma, s, kSeed);
        for (std::uint8_t f : tape.scattered) CHECK(f == 0);
        for (long long n = 0; n < c.n_particles; ++n)
            CHECK(tape.vat(c.steps, n) == s.v[static_cast<std::size_t>(n)]);
    }
    SUBCASE("huge sigma scatters nearly every step") {
        RteConfig c = study_config(20000);
        c.steps = 10;
        c.t_final = 0.1;  // dt = 0.01
        const auto sigma = SigmaField::from_function([](double) { return 1e4; }, -2, 2, 4);
        const auto tape = run_forward(c, sigma, sample_initial(c, kF0, kSeed), kSeed);
        for (int m = 1; m <= c.steps; ++m) {
            double frac = 0;
            for (long long n = 0; n < c.n_particles; ++n) frac += tape.scattered_at(m, n);
            CHECK(frac / static_cast<double>(c.n_particles) > 0.99);
        }
    }
    SUBCASE("per-step scatter fraction obeys 1 - exp(-sigma dt)") {
        RteConfig c = study_config(100000);
        c.steps = 10;
        c.t_final = 0.1;
        const double sig = 2.0;
        const auto sigma = SigmaField::from_function([=](double) { return sig; }, -2, 2, 4);
        const auto tape = run_forward(c, sigma, sample_initial(c, kF0, kSeed), kSeed);
        const double p = 1.0 - std::exp(-sig * c.dt());
        double scatters = 0;
        for (std::uint8_t f : tape.scattered) scatters += f;
        const double trials = static_cast<double>(tape.scattered.size());
        CHECK(std::abs(scatters / trials - p) < 3.0 * std::sqrt(p * (1.0 - p) / trials));
    }
    SUBCASE("velocity marginal stays uniform (KS statistic)") {
        const RteConfig c = study_config(1000000);
        const auto tape = run_forward(c, bump_sigma(), sample_initial(c, kF0, kSeed), kSeed);
        std::vector<double> v_final(tape.v.end() - c.n_particles, tape.v.end());
        CHECK(ks_uniform(std::move(v_final), c.v_lo, c.v_hi) < 0.01);
    }
}

TEST_CASE("transport exactness and replay invariance") {
    RteConfig c = study_config(2000);
    c.steps = 25;
    const auto s = sample_initial(c, kF0, kSeed);
    const auto tape = run_forward(c, bump_sigma(), s, kSeed);

    SUBCASE("positions replay bit-exactly from initial states and velocities") {
        for (long long n = 0; n < c.n_particles; ++n) {
            double x = s.x[static_cast<std::size_t>(n)];
            for (int m = 1; m <= c.steps; ++m) {
                x = x + c.dt() * tape.vat(m - 1, n);
                CHECK(x == tape.xat(m, n));
            }
        }
    }
    SUBCASE("same seed reproduces the tape bitwise") {
        const auto again = run_forward(c, bump_sigma(), s, kSeed);
        CHECK(tape.x == again.x);
        CHECK(tape.v == again.v);
        CHECK(tape.scattered == again.scattered);
        CHECK(tape.alpha == again.alpha);
    }
    SUBCASE("unscattered steps keep the velocity, scattered steps stay in range") {
        for (int m = 1; m <= c.steps; ++m)
            for (long long n = 0; n < c.n_particles; ++n) {
                if (!tape.scattered_at(m, n)) {
                    CHECK(tape.vat(m, n) == tape.vat(m - 1, n));
                } else {
                    CHECK(tape.vat(m, n) >= c.v_lo);
                    CHECK(tape.vat(m, n) < c.v_hi);
                }
                CHECK(tape.alpha_at(m, n) > 0.0);
                CHECK(tape.alpha_at(m, n) <= 1.0);
            }
    }
}

TEST_CASE("final-time objective") {
    const RteConfig c = study_config(100000);
    const auto tape = run_forward(c, bump_sigma(), sample_initial(c, kF0, kSeed), kSeed);

    SUBCASE("constant payoff is exact") {
        CHECK(objective_final(tape, [](double, double) { return 2.5; }) == doctest::Approx(2.5).epsilon(1e-15));
    }
    SUBCASE("speed-squared payoff integrates to 1/3 on a uniform velocity law") {
        const double val = objective_final(tape, [](double, double v) { return v * v; });
        // E[v^2] = 1/3 for v uniform on [-1, 1]; Var[v^2] = 1/5 - 1/9
        const double se = std::sqrt((1.0 / 5.0 - 1.0 / 9.0) / static_cast<double>(c.n_particles));
        CHECK(std::abs(val - 1.0 / 3.0) < 3.0 * se);
    }
    SUBCASE("left-restricted payoff lies strictly inside (0, 1/3)") {
        const double val =
            objective_final(tape, [](double x, double v) { return x < 0 ? v * v : 0.0; });
        CHECK(val > 0.0);
        CHECK(val < 1.0 / 3.0);
    }
}

TEST_CASE("tape serialization round trip") {
    RteConfig c = study_config(500);
    c.steps = 7;
    const auto tape = run_forward(c, bump_sigma(16), sample_initial(c, kF0, kSeed), kSeed);
    const std::string path = "rte_tape_test.bin";
    save_tape(tape, path);
    const auto back = load_tape(path);
    CHECK(back.n_particles == tape.n_particles);
    CHECK(back.steps == tape.steps);
    CHECK(back.dt == tape.dt);
    CHECK(back.seed == tape.seed);
    CHECK(back.x == tape.x);
    CHECK(back.v == tape.v);
    CHECK(back.scattered == tape.scattered);
    CHECK(back.alpha == tape.alpha);
    std::remove(path.c_str());
}

// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <doctest.h>

#include "adjmc/dsmc_adjoint.hpp"
#include "adjmc/errors.hpp"
#include "adjmc/stats.hpp"

using namespace adjmc;
using namespace adjmc::dsmc;

namespace {

constexpr std::uint64_t kSeed = 0x5eed0007ULL;

const auto phi_x4 = [](const Vec3& v) { return v.x * v.x * v.x * v.x; };
const auto dphi_x4 = [](const Vec3& v) { return Vec3{4.0 * v.x * v.x * v.x, 0.0, 0.0}; };

struct Pipeline {
    InitialConditionModel ic;
    DsmcRunResult run;
    CollisionKernel kernel;
};

Pipeline forward_pipeline(long long n, int steps, std::uint64_t seed, bool vhs) {
    Pipeline p{InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0), {}, {}};
    auto initial = sample_initial_velocities(p.ic, n, seed);
    p.kernel = vhs ? CollisionKernel::vhs(1.0 / (4.0 * M_PI), 0.5) : CollisionKernel::maxwellian();
    p.run = run_dsmc(std::move(initial), p.kernel, 0.1, steps, seed);
    return p;
}

}  // namespace

TEST_CASE("zero-horizon sweep returns the exact final data") {
    auto p = forward_pipeline(4096, 0, kSeed, false);
    const auto adj = adjoint_sweep(p.run.tape, p.run.ensemble, p.kernel, phi_x4, dphi_x4);
    const double w = 1.0 / 4096.0;
    for (std::size_t i = 0; i < adj.gamma.size(); ++i) {
        const Vec3 expect = w * dphi_x4(p.run.ensemble.v[i]);
        CHECK(adj.gamma[i].x == expect.x);
        CHECK(adj.gamma[i].y == 0.0);
        CHECK(adj.gamma[i].z == 0.0);
    }
}

TEST_CASE("backward velocity reconstruction reproduces the forward initial state") {
    auto ic = InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0);
    auto initial = sample_initial_velocities(ic, 2000, kSeed);
    const auto v0 = initial.v;
    for (const bool vhs : {false, true}) {
        auto kernel = vhs ? CollisionKernel::vhs(1.0 / (4.0 * M_PI), 0.5)
                          : CollisionKernel::maxwellian();
        auto run = run_dsmc(initial, kernel, 0.1, 20, kSeed);
        const auto adj = adjoint_sweep(run.tape, run.ensemble, kernel, phi_x4, dphi_x4);
        for (std::size_t i = 0; i < v0.size(); ++i)
            CHECK(norm(adj.velocities[i] - v0[i]) <= 1e-12 * std::max(1.0, norm(v0[i])));
    }
}

TEST_CASE("gamma bookkeeping under the backward recursion") {
    auto p = forward_pipeline(20000, 20, kSeed, false);
    SweepDiagnostics diag;
    const auto adj = adjoint_sweep(p.run.tape, p.run.ensemble, p.kernel, phi_x4, dphi_x4, -1, &diag);

    SUBCASE("the total adjoint vector is exactly conserved") {
        // pair transport preserves the pair sum and score terms cancel in
        // pairs, so sum_i gamma_i is invariant across the whole sweep
        Vec3 s_final{};
        for (std::size_t i = 0; i < adj.phi_final.size(); ++i)
            s_final += (1.0 / 20000.0) * dphi_x4(p.run.ensemble.v[i]);
        Vec3 s0{};
        for (const auto& g : adj.gamma) s0 += g;
        CHECK(norm(s0 - s_final) <= 1e-12 * std::max(1.0, norm(s_final)));
    }
    SUBCASE("maxwellian gamma norm is non-increasing backward in time") {
        // The stacked collision matrix is an isometry only on pairs whose
        // difference is aligned with the sampled sphere direction; adjoint
        // pairs are not, so each real collision contracts the pair norm.
        // The sum of squares therefore decreases monotonically; it is not
        // constant.
        REQUIRE(diag.gamma_sq_norm.size() == 21);
        for (std::size_t k = 1; k < diag.gamma_sq_norm.size(); ++k)
            CHECK(diag.gamma_sq_norm[k] <= diag.gamma_sq_norm[k - 1] * (1.0 + 1e-12));
        CHECK(diag.gamma_sq_norm.back() < 0.9 * diag.gamma_sq_norm.front());
    }
    SUBCASE("two sweeps over the same tape are bit-identical") {
        const auto again = adjoint_sweep(p.run.tape, p.run.ensemble, p.kernel, phi_x4, dphi_x4);
        for (std::size_t i = 0; i < adj.gamma.size(); ++i) {
            CHECK(adj.gamma[i].x == again.gamma[i].x);
            CHECK(adj.gamma[i].y == again.gamma[i].y);
            CHECK(adj.gamma[i].z == again.gamma[i].z);
        }
    }
}

TEST_CASE("score terms are antisymmetric within each pair") {
    // constant payoff: gamma^M = 0, so after one vhs step each pair holds
    // exactly +/- the score contribution
    auto p = forward_pipeline(2048, 1, kSeed, true);
    const auto adj = adjoint_sweep(
        p.run.tape, p.run.ensemble, p.kernel, [](const Vec3&) { return 1.0; },
        [](const Vec3&) { return Vec3{0, 0, 0}; });
    bool any_nonzero = false;
    const auto& step = p.run.tape.step[0];
    for (std::uint64_t l = step.pair_begin; l < step.pair_begin + step.pair_count; ++l) {
        const auto& pr = p.run.tape.pairs[static_cast<std::size_t>(l)];
        CHECK(norm(adj.gamma[pr.i] + adj.gamma[pr.i1]) <= 1e-15);
        any_nonzero = any_nonzero || norm(adj.gamma[pr.i]) > 0.0;
    }
    CHECK(any_nonzero);
}

TEST_CASE("sweep input validation") {
    auto p = forward_pipeline(512, 4, kSeed, true);
    SUBCASE("ensemble size must match the tape") {
        VelocityEnsemble wrong;
        wrong.v.resize(100);
        CHECK_THROWS_AS(adjoint_sweep(p.run.tape, wrong, p.kernel, phi_x4, dphi_x4),
                        std::invalid_argument);
    }
    SUBCASE("a virtual-only record at the majorant is tape corruption") {
        auto tape = p.run.tape;
        bool patched = false;
        for (auto& pr : tape.pairs)
            if (!pr.real_collision) {
                pr.q = tape.step[0].bound;
                patched = true;
                break;
            }
        REQUIRE(patched);
        CHECK_THROWS_AS(adjoint_sweep(tape, p.run.ensemble, p.kernel, phi_x4, dphi_x4), TapeError);
    }
}

TEST_CASE("zero-horizon gradient matches the Gaussian closed form") {
    auto p = forward_pipeline(1000000, 0, kSeed, false);
    const auto adj = adjoint_sweep(p.run.tape, p.run.ensemble, p.kernel, phi_x4, dphi_x4);
    const auto grad = initial_condition_gradient(adj, p.ic);
    // J = E[v_x^4] = 3 T_x^2, so dJ/dT_x = 6 T_x = 3 at T_x = 0.5
    CHECK(std::abs(grad.value[0] - 3.0) < 3.0 * grad.std_err[0]);
    CHECK(std::abs(grad.value[1]) < 3.0 * std::max(grad.std_err[1], 1e-30));
    CHECK(std::abs(grad.value[2]) < 3.0 * std::max(grad.std_err[2], 1e-30));
}

TEST_CASE("missing stored base draws is a state error") {
    auto p = forward_pipeline(512, 0, kSeed, false);
    const auto adj = adjoint_sweep(p.run.tape, p.run.ensemble, p.kernel, phi_x4, dphi_x4);
    InitialConditionModel fresh = InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0);
    CHECK_THROWS_AS(initial_condition_gradient(adj, fresh), std::logic_error);
}

TEST_CASE("adjoint gradient agrees with coupled finite differences") {
    // desk-scale version; the acceptance suite runs the full study size
    const long long n = 20000;
    const int steps = 20;
    const int reps = 8;
    for (const bool vhs : {false, true}) {
        std::vector<std::vector<double>> adj_reps, fd_reps;
        for (int rep = 0; rep < reps; ++rep) {
            auto p = forward_pipeline(n, steps, derive_seed(kSeed, 10 + rep + (vhs ? 100 : 0)), vhs);
            const auto adj = adjoint_sweep(p.run.tape, p.run.ensemble, p.kernel, phi_x4, dphi_x4);
            adj_reps.push_back(initial_condition_gradient(adj, p.ic).value);

            const auto runner = [n, steps, vhs](const std::vector<double>& th, StreamKey key) {
                auto ic = InitialConditionModel::diagonal_gaussian(th[0], th[1], th[2]);
                const std::uint64_t seed = seed_from(key);
                auto initial = sample_initial_velocities(ic, n, seed);
                auto kernel = vhs ? CollisionKernel::vhs(1.0 / (4.0 * M_PI), 0.5)
                                  : CollisionKernel::maxwellian();
                auto run = run_dsmc(std::move(initial), kernel, 0.1, steps, seed);
                return objective_phi(run.ensemble, phi_x4);
            };
            mc::FdOptions opt;
            opt.step = 1e-2;
            fd_reps.push_back(
                fd_reference_gradient(runner, {0.5, 1.0, 1.0}, opt, derive_seed(kSeed, 300 + rep + (vhs ? 100 : 0)))
                    .value);
        }
        for (int j = 0; j < 3; ++j) {
            MeanVar ma, mf;
            for (int rep = 0; rep < reps; ++rep) {
                ma.add(adj_reps[static_cast<std::size_t>(rep)][static_cast<std::size_t>(j)]);
                mf.add(fd_reps[static_cast<std::size_t>(rep)][static_cast<std::size_t>(j)]);
            }
            const double combined =
                std::sqrt(ma.std_err() * ma.std_err() + mf.std_err() * mf.std_err());
            CHECK(std::abs(ma.mean - mf.mean) <= 3.0 * combined);
        }
    }
}

TEST_CASE("zero-horizon FD reference recovers the closed form plus O(step) bias") {
    const long long n = 100000;
    const auto runner = [n](const std::vector<double>& th, StreamKey key) {
        auto ic = InitialConditionModel::diagonal_gaussian(th[0], th[1], th[2]);
        auto ens = sample_initial_velocities(ic, n, seed_from(key));
        return objective_phi(ens, phi_x4);
    };
    mc::FdOptions opt;
    opt.step = 1e-2;
    opt.repeats = 8;
    const auto g = fd_reference_gradient(runner, {0.5, 1.0, 1.0}, opt, kSeed);
    // J = 3 T_x^2: dJ/dT_x = 3, one-sided bias = step/2 * 6 T_x'' = 3 step
    CHECK(std::abs(g.value[0] - 3.0) <= 3.0 * g.std_err[0] + 3.0 * opt.step);
    CHECK(std::abs(g.value[1]) <= 3.0 * g.std_err[1] + 1e-12);
    CHECK(std::abs(g.value[2]) <= 3.0 * g.std_err[2] + 1e-12);
}

TEST_CASE("finite-difference reference costs 4 runs for 3 parameters") {
    int evals = 0;
    const auto counter = [&evals](const std::vector<double>&, StreamKey) {
        ++evals;
        return 0.0;
    };
    mc::FdOptions opt;
    opt.step = 1e-2;
    fd_reference_gradient(counter, {0.5, 1.0, 1.0}, opt, kSeed);
    CHECK(evals == 4);
}

TEST_CASE("checkpointed sweeps reuse one tape") {
    // gradients at intermediate horizons from a single forward run: sweep
    // from each snapshot level over the tape prefix
    auto ic = InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0);
    auto initial = sample_initial_velocities(ic, 10000, kSeed);
    auto kernel = CollisionKernel::maxwellian();
    const std::vector<int> levels{0, 10, 20};
    auto run = run_dsmc(std::move(initial), kernel, 0.1, 20, kSeed, levels);
    REQUIRE(run.snapshots.size() == 3);

    // sweep from level 10 must equal a fresh 10-step run's sweep
    const auto adj_mid = adjoint_sweep(run.tape, run.snapshots[1].second, kernel, phi_x4, dphi_x4, 10);
    auto ic2 = InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0);
    auto initial2 = sample_initial_velocities(ic2, 10000, kSeed);
    auto kernel2 = CollisionKernel::maxwellian();
    auto run2 = run_dsmc(std::move(initial2), kernel2, 0.1, 10, kSeed);
    const auto adj_fresh = adjoint_sweep(run2.tape, run2.ensemble, kernel2, phi_x4, dphi_x4);
    const auto g_mid = initial_condition_gradient(adj_mid, ic);
    const auto g_fresh = initial_condition_gradient(adj_fresh, ic2);
    for (int j = 0; j < 3; ++j)
        CHECK(g_mid.value[static_cast<std::size_t>(j)] ==
              doctest::Approx(g_fresh.value[static_cast<std::size_t>(j)]).epsilon(1e-12));
}

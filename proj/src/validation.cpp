// SPDX-License-Identifier: Apache-2.0
//
// Fast invariant battery behind the `validate` subcommand. Each check is a
// scaled-down version of a property the test suites pin at full size.
#include <cmath>
#include <cstdio>

#include "adjmc/dsmc_adjoint.hpp"
#include "adjmc/experiments.hpp"
#include "adjmc/rte_fvm.hpp"
#include "adjmc/stats.hpp"

namespace adjmc::harness {

using rte::fvm::Field;
using rte::fvm::FvmGrid;

double fvm_transpose_max_error(const FvmGrid& g, const std::vector<double>& sigma) {
    const int dim = g.nx * g.nv;
    std::vector<Field> fwd_cols, adj_cols;
    for (int c = 0; c < dim; ++c) {
        Field e(static_cast<std::size_t>(dim), 0.0);
        e[static_cast<std::size_t>(c)] = 1.0;
        fwd_cols.push_back(rte::fvm::forward_step(g, sigma, e));
        adj_cols.push_back(rte::fvm::adjoint_step(g, sigma, e));
    }
    double worst = 0;
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c)
            worst = std::max(
                worst, std::abs(fwd_cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] -
                                adj_cols[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
    return worst;
}

namespace {

bool check_rng(std::uint64_t seed) {
    const StreamKey key{seed, streams::make(streams::toy, 0), 7};
    if (uniform01(key) != uniform01(key)) return false;
    MeanVar mv;
    const long long n = 200000;
    for (long long i = 0; i < n; ++i)
        mv.add(uniform01({seed, streams::make(streams::toy, 1), static_cast<std::uint64_t>(i)}));
    if (std::abs(mv.mean - 0.5) > 3.0 / std::sqrt(12.0 * static_cast<double>(n))) return false;
    MeanVar msq;
    for (long long i = 0; i < 100000; ++i) {
        const Vec3 s = sample_unit_sphere({seed, streams::make(streams::toy, 2),
                                           static_cast<std::uint64_t>(2 * i)});
        if (std::abs(norm(s) - 1.0) > 1e-14) return false;
        msq.add(s.z * s.z);
    }
    return std::abs(msq.mean - 1.0 / 3.0) < 3.0 * msq.std_err();
}

bool check_score_mean_zero(std::uint64_t seed) {
    const auto model = mc::gaussian_mean_model();
    const auto g = mc::score_gradient(model, [](const mc::Point&) { return 1.0; }, {1.5}, 50000, seed);
    return std::abs(g.value[0]) < 3.0 * g.std_err[0];
}

bool check_fisher(std::uint64_t seed) {
    const auto model = mc::gaussian_mean_model();
    const auto cov = mc::score_covariance(model, {0.7}, 50000, seed);
    return std::abs(cov[0] - 1.0) < 0.05;
}

bool check_pathwise_zero(std::uint64_t seed) {
    auto model = mc::gaussian_mean_model();
    model.pushforward = [](const mc::Point& y, const mc::Params&) { return y; };
    model.pushforward_jacobian = [](const mc::Point&, const mc::Params&) {
        return std::vector<double>{0.0};
    };
    const auto g = mc::pathwise_gradient(
        model, [](const mc::Point&) { return mc::Point{1.0}; }, {2.0}, 1000, seed);
    return g.value[0] == 0.0;
}

bool check_coupled_fd_cancellation(std::uint64_t seed) {
    const auto j_hat = [](const std::vector<double>&, StreamKey key) { return uniform01(key); };
    mc::FdOptions opt;
    opt.step = 1e-3;
    const auto g = mc::coupled_fd_gradient(j_hat, {1.0}, opt, seed);
    return g.value[0] == 0.0;
}

bool check_rte_no_scatter(std::uint64_t seed) {
    rte::RteConfig rc;
    rc.n_particles = 2000;
    rc.steps = 10;
    const auto sigma = rte::SigmaField::from_function([](double) { return 0.0; }, -2, 2, 8);
    const auto f0 = rte::InitialDistribution::gaussian_pair(0.5, 0.35);
    const auto tape = rte::run_forward(rc, sigma, rte::sample_initial(rc, f0, seed), seed);
    for (std::uint8_t s : tape.scattered)
        if (s) return false;
    return true;
}

bool check_rte_scatter_rate(std::uint64_t seed) {
    rte::RteConfig rc;
    rc.n_particles = 50000;
    rc.steps = 5;
    const double sigma_val = 2.0;
    const auto sigma = rte::SigmaField::from_function([=](double) { return sigma_val; }, -2, 2, 4);
    const auto f0 = rte::InitialDistribution::gaussian_pair(0.5, 0.35);
    const auto tape = rte::run_forward(rc, sigma, rte::sample_initial(rc, f0, seed), seed);
    double scatters = 0;
    for (std::uint8_t s : tape.scattered) scatters += s;
    const double trials = static_cast<double>(tape.scattered.size());
    const double p = 1.0 - std::exp(-sigma_val * rc.dt());
    const double se = std::sqrt(p * (1.0 - p) / trials);
    return std::abs(scatters / trials - p) < 3.0 * se;
}

bool check_rte_replay(std::uint64_t seed) {
    rte::RteConfig rc;
    rc.n_particles = 500;
    rc.steps = 12;
    const auto sigma = rte::SigmaField::from_function(
        [](double x) { return 2.0 + 2.0 * std::exp(-4.0 * x * x); }, -2, 2, 16);
    const auto f0 = rte::InitialDistribution::gaussian_pair(0.5, 0.35);
    const auto initial = rte::sample_initial(rc, f0, seed);
    const auto t1 = rte::run_forward(rc, sigma, initial, seed);
    const auto t2 = rte::run_forward(rc, sigma, initial, seed);
    return t1.x == t2.x && t1.v == t2.v && t1.scattered == t2.scattered;
}

FvmGrid small_grid() {
    FvmGrid g;
    g.nx = 8;
    g.nv = 4;
    g.steps = 5;
    g.t_final = 5 * 0.04;
    return g;
}

bool check_fvm_transpose(std::uint64_t) {
    const FvmGrid g = small_grid();
    const auto sigma = rte::fvm::sigma_on_grid(g, [](double x) { return 1.0 + 0.5 * x; });
    return fvm_transpose_max_error(g, sigma) <= 1e-13;
}

bool check_fvm_duality(std::uint64_t seed) {
    const FvmGrid g = small_grid();
    const auto sigma = rte::fvm::sigma_on_grid(g, [](double x) { return 1.5 + std::sin(x); });
    const int dim = g.nx * g.nv;
    Field f0(static_cast<std::size_t>(dim)), lam(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
        f0[static_cast<std::size_t>(i)] =
            uniform01({seed, streams::make(streams::harness, 1), static_cast<std::uint64_t>(i)});
        lam[static_cast<std::size_t>(i)] =
            uniform01({seed, streams::make(streams::harness, 2), static_cast<std::uint64_t>(i)});
    }
    const auto f_levels = rte::fvm::fvm_forward(g, sigma, f0);
    const auto l_levels = rte::fvm::fvm_adjoint(g, sigma, lam);
    double a = 0, b = 0;
    for (int i = 0; i < dim; ++i) {
        a += l_levels.front()[static_cast<std::size_t>(i)] * f_levels.front()[static_cast<std::size_t>(i)];
        b += l_levels.back()[static_cast<std::size_t>(i)] * f_levels.back()[static_cast<std::size_t>(i)];
    }
    return std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b));
}

bool check_p_otd_constant_payoff(std::uint64_t seed) {
    rte::RteConfig rc;
    rc.n_particles = 4000;
    rc.steps = 10;
    const auto sigma = rte::SigmaField::from_function(
        [](double x) { return 2.0 + 2.0 * std::exp(-4.0 * x * x); }, -2, 2, 20);
    const auto f0 = rte::InitialDistribution::gaussian_pair(0.5, 0.35);
    const auto tape = rte::run_forward(rc, sigma, rte::sample_initial(rc, f0, seed), seed);
    const auto psi = rte::terminal_adjoint_weights(tape, [](double, double) { return 3.0; });
    const auto g = rte::p_otd_gradient(tape, psi, rte::GradientGrid::like(sigma), 10);
    for (double v : g.value)
        if (std::abs(v) > 1e-12) return false;
    return true;
}

bool check_p_dto_score_identity(std::uint64_t seed) {
    rte::RteConfig rc;
    rc.n_particles = 50000;
    rc.steps = 4;
    const double sigma_val = 2.0;
    const auto sigma = rte::SigmaField::from_function([=](double) { return sigma_val; }, -2, 2, 4);
    const auto f0 = rte::InitialDistribution::gaussian_pair(0.5, 0.35);
    const auto tape = rte::run_forward(rc, sigma, rte::sample_initial(rc, f0, seed), seed);
    const double alpha = std::exp(-sigma_val * rc.dt());
    const double var_xi = alpha / (1.0 - alpha);
    for (int m = 1; m <= rc.steps; ++m) {
        double mean_xi = 0;
        for (long long n = 0; n < rc.n_particles; ++n)
            mean_xi += tape.scattered_at(m, n) ? alpha / (1.0 - alpha) : -1.0;
        mean_xi /= static_cast<double>(rc.n_particles);
        if (std::abs(mean_xi) > 3.0 * std::sqrt(var_xi / static_cast<double>(rc.n_particles)))
            return false;
    }
    return true;
}

bool check_dsmc_conservation(std::uint64_t seed) {
    auto ic = dsmc::InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0);
    auto initial = dsmc::sample_initial_velocities(ic, 2000, seed);
    const Vec3 p0 = [&] {
        Vec3 p{};
        for (const auto& v : initial.v) p += v;
        return p;
    }();
    double e0 = 0;
    for (const auto& v : initial.v) e0 += norm_sq(v);
    auto kernel = dsmc::CollisionKernel::vhs(1.0 / (4.0 * M_PI), 0.5);
    auto run = dsmc::run_dsmc(std::move(initial), kernel, 0.1, 10, seed);
    Vec3 p1{};
    double e1 = 0;
    for (const auto& v : run.ensemble.v) {
        p1 += v;
        e1 += norm_sq(v);
    }
    double speed_scale = 0;
    for (const auto& v : run.ensemble.v) speed_scale += norm(v);
    return norm(p1 - p0) <= 1e-10 * speed_scale && std::abs(e1 - e0) <= 1e-10 * e0;
}

bool check_dsmc_pairs_disjoint(std::uint64_t seed) {
    auto ic = dsmc::InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0);
    auto initial = dsmc::sample_initial_velocities(ic, 1000, seed);
    auto kernel = dsmc::CollisionKernel::maxwellian();
    auto run = dsmc::run_dsmc(std::move(initial), kernel, 0.2, 5, seed);
    for (const auto& step : run.tape.step) {
        std::vector<std::uint8_t> seen(1000, 0);
        for (std::uint64_t l = step.pair_begin; l < step.pair_begin + step.pair_count; ++l) {
            const auto& pr = run.tape.pairs[static_cast<std::size_t>(l)];
            if (seen[pr.i] || seen[pr.i1] || pr.i == pr.i1) return false;
            seen[pr.i] = seen[pr.i1] = 1;
        }
    }
    return true;
}

bool check_dsmc_maxwellian_all_real(std::uint64_t seed) {
    auto ic = dsmc::InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0);
    auto initial = dsmc::sample_initial_velocities(ic, 1000, seed);
    auto kernel = dsmc::CollisionKernel::maxwellian();
    auto run = dsmc::run_dsmc(std::move(initial), kernel, 0.2, 5, seed);
    for (const auto& pr : run.tape.pairs)
        if (!pr.real_collision) return false;
    return true;
}

bool check_adjoint_final_data(std::uint64_t seed) {
    auto ic = dsmc::InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0);
    auto initial = dsmc::sample_initial_velocities(ic, 512, seed);
    auto kernel = dsmc::CollisionKernel::maxwellian();
    auto run = dsmc::run_dsmc(initial, kernel, 0.1, 0, seed);
    const auto adj = dsmc::adjoint_sweep(
        run.tape, run.ensemble, kernel, [](const Vec3& v) { return v.x * v.x * v.x * v.x; },
        [](const Vec3& v) { return Vec3{4.0 * v.x * v.x * v.x, 0, 0}; });
    const double w = 1.0 / 512.0;
    for (std::size_t i = 0; i < adj.gamma.size(); ++i) {
        const Vec3 expect = w * Vec3{4.0 * std::pow(initial.v[i].x, 3.0), 0, 0};
        if (std::abs(adj.gamma[i].x - expect.x) > 1e-15 * std::max(1.0, std::abs(expect.x)))
            return false;
    }
    return true;
}

bool check_adjoint_reconstruction(std::uint64_t seed) {
    auto ic = dsmc::InitialConditionModel::diagonal_gaussian(0.5, 1.0, 1.0);
    auto initial = dsmc::sample_initial_velocities(ic, 1000, seed);
    const auto v0 = initial.v;
    auto kernel = dsmc::CollisionKernel::vhs(1.0 / (4.0 * M_PI), 0.5);
    auto run = dsmc::run_dsmc(std::move(initial), kernel, 0.1, 8, seed);
    const auto adj = dsmc::adjoint_sweep(
        run.tape, run.ensemble, kernel, [](const Vec3& v) { return v.x; },
        [](const Vec3&) { return Vec3{1, 0, 0}; });
    for (std::size_t i = 0; i < v0.size(); ++i)
        if (norm(adj.velocities[i] - v0[i]) > 1e-12 * std::max(1.0, norm(v0[i]))) return false;
    return true;
}

}  // namespace

std::vector<std::pair<std::string, bool>> run_validation_suite(std::uint64_t seed) {
    std::vector<std::pair<std::string, bool>> results;
    const auto run = [&](const char* name, bool (*fn)(std::uint64_t)) {
        bool ok = false;
        try {
            ok = fn(seed);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "validate %s: %s\n", name, e.what());
            ok = false;
        }
        results.emplace_back(name, ok);
    };
    run("rng_streams", check_rng);
    run("score_mean_zero", check_score_mean_zero);
    run("fisher_information", check_fisher);
    run("pathwise_theta_independent", check_pathwise_zero);
    run("coupled_fd_cancellation", check_coupled_fd_cancellation);
    run("rte_zero_sigma_no_scatter", check_rte_no_scatter);
    run("rte_scatter_rate_law", check_rte_scatter_rate);
    run("rte_replay_bit_exact", check_rte_replay);
    run("fvm_transpose_consistency", check_fvm_transpose);
    run("fvm_discrete_duality", check_fvm_duality);
    run("p_otd_constant_payoff", check_p_otd_constant_payoff);
    run("p_dto_score_identity", check_p_dto_score_identity);
    run("dsmc_conservation", check_dsmc_conservation);
    run("dsmc_pairs_disjoint", check_dsmc_pairs_disjoint);
    run("dsmc_maxwellian_all_real", check_dsmc_maxwellian_all_real);
    run("adjoint_final_data", check_adjoint_final_data);
    run("adjoint_velocity_reconstruction", check_adjoint_reconstruction);
    return results;
}

}  // namespace adjmc::harness

// SPDX-License-Identifier: Apache-2.0
#include "adjmc/experiments.hpp"

#include <chrono>
#include <cmath>

#include "adjmc/errors.hpp"
#include "adjmc/stats.hpp"

namespace adjmc::harness {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

rte::RteConfig make_rte_config(const ExperimentConfig& c, long long n_override = 0) {
    rte::RteConfig rc;
    rc.x_lo = c.rte.x_lo;
    rc.x_hi = c.rte.x_hi;
    rc.v_lo = c.rte.v_lo;
    rc.v_hi = c.rte.v_hi;
    rc.t_final = c.rte.t_final;
    rc.steps = c.rte.steps;
    rc.n_particles = n_override > 0 ? n_override : c.rte.n_particles;
    return rc;
}

/// Mean and across-repeat standard error of a set of gradient grids.
rte::GradientGrid aggregate_grids(const std::vector<rte::GradientGrid>& reps) {
    rte::GradientGrid out = reps.front();
    const std::size_t bins = out.value.size();
    out.std_err.assign(bins, 0.0);
    for (std::size_t j = 0; j < bins; ++j) {
        MeanVar mv;
        for (const auto& g : reps) mv.add(g.value[j]);
        out.value[j] = mv.mean;
        out.std_err[j] = mv.std_err();
    }
    return out;
}

mc::GradientEstimate aggregate_estimates(const std::vector<std::vector<double>>& reps,
                                         mc::Method method) {
    mc::GradientEstimate out;
    out.method = method;
    out.n_samples = static_cast<long long>(reps.size());
    const std::size_t m = reps.front().size();
    for (std::size_t j = 0; j < m; ++j) {
        MeanVar mv;
        for (const auto& r : reps) mv.add(r[j]);
        out.value.push_back(mv.mean);
        out.std_err.push_back(mv.std_err());
    }
    return out;
}

}  // namespace

rte::SigmaField make_sigma_field(const ExperimentConfig& c) {
    return rte::SigmaField::from_function(
        [&c](double x) { return c.rte.sigma_base + c.rte.sigma_bump * std::exp(-c.rte.sigma_decay * x * x); },
        c.rte.x_lo, c.rte.x_hi, c.rte.sigma_cells);
}

rte::InitialDistribution make_initial_distribution(const ExperimentConfig& c) {
    return rte::InitialDistribution::gaussian_pair(c.rte.f0_offset, c.rte.f0_width);
}

double payoff_speed_sq_left(double x, double v) { return x < 0 ? v * v : 0.0; }

rte::GradientGrid fine_fvm_reference(const ExperimentConfig& c, int report_bins) {
    rte::fvm::FvmGrid grid;
    grid.x_lo = c.rte.x_lo;
    grid.x_hi = c.rte.x_hi;
    grid.v_lo = c.rte.v_lo;
    grid.v_hi = c.rte.v_hi;
    grid.nx = c.fvm.nx;
    grid.nv = c.fvm.nv;
    grid.steps = c.fvm.steps;
    grid.t_final = c.rte.t_final;
    const auto sigma = rte::fvm::sigma_on_grid(grid, [&c](double x) {
        return c.rte.sigma_base + c.rte.sigma_bump * std::exp(-c.rte.sigma_decay * x * x);
    });
    const auto f_levels = rte::fvm::fvm_forward(grid, sigma, rte::fvm::initial_field(grid, make_initial_distribution(c)));
    const auto l_levels = rte::fvm::fvm_adjoint(
        grid, sigma, rte::fvm::terminal_adjoint_field(grid, payoff_speed_sq_left));
    const auto fine = rte::fvm::fvm_gradient(f_levels, l_levels, grid);
    return rte::restrict_bins(fine, report_bins);
}

dsmc::CollisionKernel make_kernel(const ExperimentConfig& c) {
    if (c.dsmc.kernel == "vhs") return dsmc::CollisionKernel::vhs(c.dsmc.vhs_c, c.dsmc.vhs_beta);
    return dsmc::CollisionKernel::maxwellian();
}

RteGradientReport run_rte_gradient(const ExperimentConfig& c, PhaseTimings* timings) {
    RteGradientReport report;
    const auto sigma = make_sigma_field(c);
    const auto f0 = make_initial_distribution(c);
    const rte::GradientGrid grid = rte::GradientGrid::like(sigma);
    const bool want_otd = c.rte.method == "p-otd" || c.rte.method == "all";
    const bool want_dto = c.rte.method == "p-dto" || c.rte.method == "all";
    const bool want_fvm = c.rte.method == "fvm" || c.rte.method == "all";

    double t_forward = 0, t_gradient = 0;
    if (want_otd || want_dto) {
        const rte::RteConfig rc = make_rte_config(c);
        for (int rep = 0; rep < c.repeats; ++rep) {
            const std::uint64_t rep_seed = derive_seed(c.seed, static_cast<std::uint64_t>(rep));
            const double t0 = now_seconds();
            const auto initial = rte::sample_initial(rc, f0, rep_seed);
            const auto tape = rte::run_forward(rc, sigma, initial, rep_seed);
            const double t1 = now_seconds();
            t_forward += t1 - t0;
            if (want_otd) {
                const auto psi = rte::terminal_adjoint_weights(tape, payoff_speed_sq_left);
                report.per_repeat_otd.push_back(rte::p_otd_gradient(tape, psi, grid, c.rte.v_bins));
            }
            if (want_dto)
                report.per_repeat_dto.push_back(rte::p_dto_gradient(tape, payoff_speed_sq_left, grid));
            t_gradient += now_seconds() - t1;
        }
        if (want_otd) {
            report.p_otd = aggregate_grids(report.per_repeat_otd);
            report.have_p_otd = true;
        }
        if (want_dto) {
            report.p_dto = aggregate_grids(report.per_repeat_dto);
            report.have_p_dto = true;
        }
    }
    if (want_fvm) {
        const double t0 = now_seconds();
        report.fvm_ref = fine_fvm_reference(c, c.rte.sigma_cells);
        report.have_fvm = true;
        if (timings) timings->add("fvm_reference", now_seconds() - t0);
    }
    if (timings) {
        timings->add("rte_forward_total", t_forward);
        timings->add("rte_gradient_total", t_gradient);
    }
    return report;
}

mc::RandomObjective dsmc_objective_runner(const ExperimentConfig& c) {
    return [c](const std::vector<double>& theta, StreamKey key) {
        auto ic = dsmc::InitialConditionModel::diagonal_gaussian(theta[0], theta[1], theta[2]);
        const std::uint64_t seed = seed_from(key);
        auto ensemble = dsmc::sample_initial_velocities(ic, c.dsmc.n_particles, seed);
        auto kernel = make_kernel(c);
        auto run = dsmc::run_dsmc(std::move(ensemble), kernel, c.dsmc.dt, c.dsmc.steps, seed);
        return dsmc::objective_phi(run.ensemble, [](const Vec3& v) { return v.x * v.x * v.x * v.x; });
    };
}

DsmcGradientReport run_dsmc_gradient(const ExperimentConfig& c, PhaseTimings* timings) {
    DsmcGradientReport report;
    const bool want_adj = c.dsmc.method == "adjoint" || c.dsmc.method == "both";
    const bool want_fd = c.dsmc.method == "fd" || c.dsmc.method == "both";
    const auto phi = [](const Vec3& v) { return v.x * v.x * v.x * v.x; };
    const auto dphi = [](const Vec3& v) { return Vec3{4.0 * v.x * v.x * v.x, 0, 0}; };

    if (want_adj) {
        for (int rep = 0; rep < c.repeats; ++rep) {
            const std::uint64_t rep_seed = derive_seed(c.seed, static_cast<std::uint64_t>(rep));
            auto ic = dsmc::InitialConditionModel::diagonal_gaussian(c.dsmc.tx, c.dsmc.ty, c.dsmc.tz);
            auto initial = dsmc::sample_initial_velocities(ic, c.dsmc.n_particles, rep_seed);
            auto kernel = make_kernel(c);
            const double t0 = now_seconds();
            auto run = dsmc::run_dsmc(std::move(initial), kernel, c.dsmc.dt, c.dsmc.steps, rep_seed);
            const double t1 = now_seconds();
            const auto adj = dsmc::adjoint_sweep(run.tape, run.ensemble, kernel, phi, dphi);
            const double t2 = now_seconds();
            report.forward_seconds += t1 - t0;
            report.adjoint_seconds += t2 - t1;
            report.per_repeat_adjoint.push_back(dsmc::initial_condition_gradient(adj, ic).value);
        }
        report.adjoint = aggregate_estimates(report.per_repeat_adjoint, mc::Method::pathwise);
        report.have_adjoint = true;
    }
    if (want_fd) {
        const auto runner = dsmc_objective_runner(c);
        mc::FdOptions opt;
        opt.step = c.fd.step;
        opt.central = c.fd.central;
        opt.mode = mc::FdMode::coupled;
        const std::vector<double> theta{c.dsmc.tx, c.dsmc.ty, c.dsmc.tz};
        const double t0 = now_seconds();
        for (int rep = 0; rep < c.repeats; ++rep) {
            const std::uint64_t rep_seed =
                derive_seed(c.seed ^ 0xfd5eedULL, static_cast<std::uint64_t>(rep));
            report.per_repeat_fd.push_back(mc::coupled_fd_gradient(runner, theta, opt, rep_seed).value);
        }
        report.fd = aggregate_estimates(report.per_repeat_fd, mc::Method::coupled_fd);
        report.have_fd = true;
        if (timings) timings->add("dsmc_fd_total", now_seconds() - t0);
    }
    if (timings) {
        timings->add("dsmc_forward_total", report.forward_seconds);
        timings->add("dsmc_adjoint_total", report.adjoint_seconds);
    }
    return report;
}

ScalingReport scaling_study(const ExperimentConfig& c, const std::vector<long long>& n_list,
                            int repeats) {
    if (n_list.size() < 3)
        throw std::invalid_argument("scaling_study: need at least three particle counts");
    ScalingReport report;
    report.n = n_list;

    if (c.scaling.target == "rte") {
        report.method = {"p_otd", "p_dto"};
        report.error_std.assign(2, {});
        const auto sigma = make_sigma_field(c);
        const auto f0 = make_initial_distribution(c);
        const rte::GradientGrid grid = rte::GradientGrid::like(sigma);
        const auto reference = fine_fvm_reference(c, c.rte.sigma_cells);
        for (long long n : n_list) {
            const rte::RteConfig rc = make_rte_config(c, n);
            std::vector<double> err_otd, err_dto;
            for (int rep = 0; rep < repeats; ++rep) {
                const std::uint64_t rep_seed = derive_seed(
                    c.seed ^ static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep));
                const auto initial = rte::sample_initial(rc, f0, rep_seed);
                const auto tape = rte::run_forward(rc, sigma, initial, rep_seed);
                const auto psi = rte::terminal_adjoint_weights(tape, payoff_speed_sq_left);
                const auto g_otd = rte::p_otd_gradient(tape, psi, grid, c.rte.v_bins);
                const auto g_dto = rte::p_dto_gradient(tape, payoff_speed_sq_left, grid);
                double e_otd = 0, e_dto = 0;
                for (std::size_t j = 0; j < reference.value.size(); ++j) {
                    e_otd += (g_otd.value[j] - reference.value[j]) * (g_otd.value[j] - reference.value[j]);
                    e_dto += (g_dto.value[j] - reference.value[j]) * (g_dto.value[j] - reference.value[j]);
                }
                err_otd.push_back(std::sqrt(e_otd));
                err_dto.push_back(std::sqrt(e_dto));
            }
            report.error_std[0].push_back(std::sqrt(sample_variance(err_otd)));
            report.error_std[1].push_back(std::sqrt(sample_variance(err_dto)));
        }
    } else {
        report.method = {"adjoint"};
        report.error_std.assign(1, {});
        const auto phi = [](const Vec3& v) { return v.x * v.x * v.x * v.x; };
        const auto dphi = [](const Vec3& v) { return Vec3{4.0 * v.x * v.x * v.x, 0, 0}; };

        auto gradient_at = [&](long long n, std::uint64_t seed) {
            auto ic = dsmc::InitialConditionModel::diagonal_gaussian(c.dsmc.tx, c.dsmc.ty, c.dsmc.tz);
            auto initial = dsmc::sample_initial_velocities(ic, n, seed);
            auto kernel = make_kernel(c);
            auto run = dsmc::run_dsmc(std::move(initial), kernel, c.dsmc.dt, c.dsmc.steps, seed);
            const auto adj = dsmc::adjoint_sweep(run.tape, run.ensemble, kernel, phi, dphi);
            return dsmc::initial_condition_gradient(adj, ic).value;
        };

        // reference: analytic when there is no collision horizon, otherwise a
        // high-resolution adjoint average
        std::vector<double> reference{6.0 * c.dsmc.tx, 0.0, 0.0};
        if (c.dsmc.steps > 0) {
            long long n_max = 0;
            for (long long n : n_list) n_max = std::max(n_max, n);
            std::vector<std::vector<double>> refs;
            for (int rep = 0; rep < 4; ++rep)
                refs.push_back(gradient_at(
                    8 * n_max, derive_seed(c.seed ^ 0xbeefULL, static_cast<std::uint64_t>(rep))));
            reference = aggregate_estimates(refs, mc::Method::pathwise).value;
        }

        for (long long n : n_list) {
            std::vector<double> errs;
            for (int rep = 0; rep < repeats; ++rep) {
                const auto g = gradient_at(n, derive_seed(c.seed ^ static_cast<std::uint64_t>(n),
                                                          static_cast<std::uint64_t>(rep)));
                double e = 0;
                for (std::size_t j = 0; j < g.size(); ++j)
                    e += (g[j] - reference[j]) * (g[j] - reference[j]);
                errs.push_back(std::sqrt(e));
            }
            report.error_std[0].push_back(std::sqrt(sample_variance(errs)));
        }
    }

    std::vector<double> n_d(report.n.begin(), report.n.end());
    for (const auto& col : report.error_std) report.slope.push_back(loglog_slope(n_d, col));
    return report;
}

}  // namespace adjmc::harness

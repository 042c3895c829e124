// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "adjmc/csv.hpp"
#include "adjmc/errors.hpp"
#include "adjmc/experiments.hpp"
#include "adjmc/stats.hpp"

namespace adjmc::harness {

namespace {

namespace fs = std::filesystem;

constexpr int kSchemaVersion = 1;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void write_run_manifest(const ExperimentConfig& c, const fs::path& dir,
                        const std::vector<std::string>& outputs) {
    std::vector<std::pair<std::string, std::string>> entries;
    entries.emplace_back("schema_version", std::to_string(kSchemaVersion));
    for (auto& e : c.manifest_entries()) entries.push_back(e);
    for (std::size_t i = 0; i < outputs.size(); ++i)
        entries.emplace_back("output." + std::to_string(i), outputs[i]);
    write_manifest((dir / "run_manifest.txt").string(), entries);
}

void write_timings(const PhaseTimings& t, const fs::path& dir) {
    CsvWriter csv((dir / "timings.csv").string(), {"phase", "seconds"});
    for (const auto& [name, sec] : t.entries) csv.row({name, csv_double(sec)});
}

int do_mc_demo(const ExperimentConfig& c, const fs::path& dir, PhaseTimings& timings,
               std::vector<std::string>& outputs) {
    const double t0 = now_seconds();
    const long long n = c.mc_demo_samples;
    CsvWriter csv((dir / "mc_demo.csv").string(), {"method", "N", "component", "value", "std_err", "analytic"});
    outputs.push_back("mc_demo.csv");

    // mean-parameter family, payoff x^2 at theta = 2: gradient 2 theta
    {
        const auto model = mc::gaussian_mean_model();
        const auto f = [](const mc::Point& x) { return x[0] * x[0]; };
        const auto g = mc::score_gradient(model, f, {2.0}, n, c.seed);
        csv.row({"score", std::to_string(n), "0", csv_double(g.value[0]), csv_double(g.std_err[0]),
                 csv_double(4.0)});
    }
    // scale family T(y) = theta y + 3, payoff x^2 at theta = 1: gradient 2 theta
    {
        const auto model = mc::gaussian_affine_model(3.0);
        const auto gf = [](const mc::Point& x) { return mc::Point{2.0 * x[0]}; };
        const auto g = mc::pathwise_gradient(model, gf, {1.0}, n, derive_seed(c.seed, 1));
        csv.row({"pathwise", std::to_string(n), "0", csv_double(g.value[0]),
                 csv_double(g.std_err[0]), csv_double(2.0)});
    }
    // coupled finite differences on the mean family
    {
        const auto model = mc::gaussian_mean_model();
        const auto j_hat = [&model, n](const mc::Params& th, StreamKey key) {
            const std::uint64_t seed = seed_from(key);
            double acc = 0;
            for (long long i = 0; i < n; ++i) {
                const StreamKey k{seed, streams::make(streams::toy, static_cast<std::uint64_t>(i)), 0};
                const auto x = model.sampler(th, k);
                acc += x[0] * x[0];
            }
            return acc / static_cast<double>(n);
        };
        mc::FdOptions opt;
        opt.step = c.fd.step;
        opt.central = c.fd.central;
        opt.repeats = std::max(2, c.repeats);
        const auto g = mc::coupled_fd_gradient(j_hat, {2.0}, opt, derive_seed(c.seed, 2));
        csv.row({"coupled_fd", std::to_string(n), "0", csv_double(g.value[0]),
                 csv_double(g.std_err[0]), csv_double(4.0)});
    }
    timings.add("mc_demo", now_seconds() - t0);
    return 0;
}

int do_rte_forward(const ExperimentConfig& c, const fs::path& dir, PhaseTimings& timings,
                   std::vector<std::string>& outputs) {
    const double t0 = now_seconds();
    rte::RteConfig rc;
    rc.x_lo = c.rte.x_lo;
    rc.x_hi = c.rte.x_hi;
    rc.v_lo = c.rte.v_lo;
    rc.v_hi = c.rte.v_hi;
    rc.t_final = c.rte.t_final;
    rc.steps = c.rte.steps;
    rc.n_particles = c.rte.n_particles;
    const auto sigma = make_sigma_field(c);
    const auto initial = rte::sample_initial(rc, make_initial_distribution(c), c.seed);
    const auto tape = rte::run_forward(rc, sigma, initial, c.seed);
    rte::save_tape(tape, (dir / "rte_tape.bin").string());
    rte::write_final_marginals_csv(tape, (dir / "rte_marginals.csv").string(), c.rte.marginal_bins);
    outputs.push_back("rte_tape.bin");
    outputs.push_back("rte_marginals.csv");
    timings.add("rte_forward", now_seconds() - t0);
    return 0;
}

int do_rte_gradient(const ExperimentConfig& c, const fs::path& dir, PhaseTimings& timings,
                    std::vector<std::string>& outputs) {
    const auto report = run_rte_gradient(c, &timings);
    std::vector<std::string> cols{"bin_center"};
    if (report.have_p_otd) {
        cols.push_back("grad_p_otd");
        cols.push_back("std_err_p_otd");
    }
    if (report.have_p_dto) {
        cols.push_back("grad_p_dto");
        cols.push_back("std_err_p_dto");
    }
    if (report.have_fvm) cols.push_back("grad_fvm_ref");
    CsvWriter csv((dir / "rte_gradient.csv").string(), cols);
    outputs.push_back("rte_gradient.csv");

    const rte::GradientGrid& any = report.have_p_otd  ? report.p_otd
                                   : report.have_p_dto ? report.p_dto
                                                       : report.fvm_ref;
    for (int j = 0; j < any.bins; ++j) {
        std::vector<std::string> row{csv_double(any.bin_center(j))};
        if (report.have_p_otd) {
            row.push_back(csv_double(report.p_otd.value[static_cast<std::size_t>(j)]));
            row.push_back(csv_double(report.p_otd.std_err[static_cast<std::size_t>(j)]));
        }
        if (report.have_p_dto) {
            row.push_back(csv_double(report.p_dto.value[static_cast<std::size_t>(j)]));
            row.push_back(csv_double(report.p_dto.std_err[static_cast<std::size_t>(j)]));
        }
        if (report.have_fvm) row.push_back(csv_double(report.fvm_ref.value[static_cast<std::size_t>(j)]));
        csv.row(row);
    }

    // per-repeat values alongside, so the aggregates are recomputable
    if (!report.per_repeat_otd.empty() || !report.per_repeat_dto.empty()) {
        CsvWriter reps((dir / "rte_gradient_repeats.csv").string(),
                       {"repeat", "bin_center", "grad_p_otd", "grad_p_dto"});
        outputs.push_back("rte_gradient_repeats.csv");
        const std::size_t n_reps =
            std::max(report.per_repeat_otd.size(), report.per_repeat_dto.size());
        for (std::size_t rep = 0; rep < n_reps; ++rep)
            for (int j = 0; j < any.bins; ++j) {
                const auto cell = [&](const std::vector<rte::GradientGrid>& grids) {
                    return rep < grids.size()
                               ? csv_double(grids[rep].value[static_cast<std::size_t>(j)])
                               : std::string();
                };
                reps.row({std::to_string(rep), csv_double(any.bin_center(j)),
                          cell(report.per_repeat_otd), cell(report.per_repeat_dto)});
            }
    }
    return 0;
}

int do_dsmc_forward(const ExperimentConfig& c, const fs::path& dir, PhaseTimings& timings,
                    std::vector<std::string>& outputs) {
    const double t0 = now_seconds();
    auto ic = dsmc::InitialConditionModel::diagonal_gaussian(c.dsmc.tx, c.dsmc.ty, c.dsmc.tz);
    auto initial = dsmc::sample_initial_velocities(ic, c.dsmc.n_particles, c.seed);
    auto kernel = make_kernel(c);
    std::vector<int> snaps;
    for (int k = 0; k <= c.dsmc.steps; ++k) snaps.push_back(k);
    auto run = dsmc::run_dsmc(std::move(initial), kernel, c.dsmc.dt, c.dsmc.steps, c.seed, snaps);
    dsmc::save_tape(run.tape, (dir / "dsmc_tape.bin").string());
    std::vector<std::pair<double, dsmc::VelocityEnsemble>> series;
    for (auto& [level, ens] : run.snapshots)
        series.emplace_back(level * c.dsmc.dt, std::move(ens));
    dsmc::write_moments_csv(series, (dir / "dsmc_moments.csv").string());
    outputs.push_back("dsmc_tape.bin");
    outputs.push_back("dsmc_moments.csv");
    timings.add("dsmc_forward", now_seconds() - t0);
    return 0;
}

int do_dsmc_gradient(const ExperimentConfig& c, const fs::path& dir, PhaseTimings& timings,
                     std::vector<std::string>& outputs) {
    const auto report = run_dsmc_gradient(c, &timings);
    CsvWriter csv((dir / "dsmc_gradient.csv").string(),
                  {"component", "adjoint_value", "adjoint_stderr", "fd_value", "fd_stderr",
                   "combined_z"});
    outputs.push_back("dsmc_gradient.csv");
    const char* names[3] = {"T_x", "T_y", "T_z"};
    for (int j = 0; j < 3; ++j) {
        const double av = report.have_adjoint ? report.adjoint.value[static_cast<std::size_t>(j)] : 0;
        const double ae = report.have_adjoint ? report.adjoint.std_err[static_cast<std::size_t>(j)] : 0;
        const double fv = report.have_fd ? report.fd.value[static_cast<std::size_t>(j)] : 0;
        const double fe = report.have_fd ? report.fd.std_err[static_cast<std::size_t>(j)] : 0;
        double z = 0;
        if (report.have_adjoint && report.have_fd) {
            const double denom = std::sqrt(ae * ae + fe * fe);
            z = denom > 0 ? (av - fv) / denom : 0.0;
        }
        csv.row({names[j], csv_double(av), csv_double(ae), csv_double(fv), csv_double(fe),
                 csv_double(z)});
    }

    if (!report.per_repeat_adjoint.empty() || !report.per_repeat_fd.empty()) {
        CsvWriter reps((dir / "dsmc_gradient_repeats.csv").string(),
                       {"repeat", "component", "adjoint_value", "fd_value"});
        outputs.push_back("dsmc_gradient_repeats.csv");
        const std::size_t n_reps =
            std::max(report.per_repeat_adjoint.size(), report.per_repeat_fd.size());
        for (std::size_t rep = 0; rep < n_reps; ++rep)
            for (int j = 0; j < 3; ++j) {
                const auto cell = [&](const std::vector<std::vector<double>>& vals) {
                    return rep < vals.size() ? csv_double(vals[rep][static_cast<std::size_t>(j)])
                                             : std::string();
                };
                reps.row({std::to_string(rep), names[j], cell(report.per_repeat_adjoint),
                          cell(report.per_repeat_fd)});
            }
    }
    return 0;
}

int do_scaling(const ExperimentConfig& config, const fs::path& dir, PhaseTimings& timings,
               std::vector<std::string>& outputs) {
    const double t0 = now_seconds();
    ExperimentConfig c = config;
    c.scaling.target = c.kind == "dsmc_scaling" ? "dsmc" : "rte";
    std::vector<long long> n_list;
    for (int p = c.scaling.n_lo_log2; p <= c.scaling.n_hi_log2; ++p) n_list.push_back(1LL << p);
    const auto report = scaling_study(c, n_list, c.scaling.repeats);

    std::vector<std::string> cols{"n"};
    for (const auto& m : report.method) cols.push_back("error_std_" + m);
    CsvWriter csv((dir / "scaling.csv").string(), cols);
    outputs.push_back("scaling.csv");
    for (std::size_t i = 0; i < report.n.size(); ++i) {
        std::vector<std::string> row{std::to_string(report.n[i])};
        for (const auto& col : report.error_std) row.push_back(csv_double(col[i]));
        csv.row(row);
    }
    CsvWriter slopes((dir / "scaling_slopes.csv").string(), {"method", "loglog_slope"});
    outputs.push_back("scaling_slopes.csv");
    for (std::size_t m = 0; m < report.method.size(); ++m)
        slopes.row({report.method[m], csv_double(report.slope[m])});
    timings.add("scaling", now_seconds() - t0);
    return 0;
}

int do_validate(const ExperimentConfig& c, const fs::path& dir, PhaseTimings& timings,
                std::vector<std::string>& outputs) {
    const double t0 = now_seconds();
    const auto results = run_validation_suite(c.seed);
    CsvWriter csv((dir / "validate.csv").string(), {"check", "passed"});
    outputs.push_back("validate.csv");
    int failures = 0;
    for (const auto& [name, ok] : results) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << '\n';
        csv.row({name, ok ? "1" : "0"});
        failures += ok ? 0 : 1;
    }
    timings.add("validate", now_seconds() - t0);
    return failures == 0 ? 0 : 1;
}

}  // namespace

int run_experiment(const ExperimentConfig& c) {
    c.validate();
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);

    PhaseTimings timings;
    std::vector<std::string> outputs;
    int rc = 0;
    if (c.kind == "mc_demo")
        rc = do_mc_demo(c, dir, timings, outputs);
    else if (c.kind == "rte_forward")
        rc = do_rte_forward(c, dir, timings, outputs);
    else if (c.kind == "rte_gradient")
        rc = do_rte_gradient(c, dir, timings, outputs);
    else if (c.kind == "rte_scaling" || c.kind == "dsmc_scaling")
        rc = do_scaling(c, dir, timings, outputs);
    else if (c.kind == "dsmc_forward")
        rc = do_dsmc_forward(c, dir, timings, outputs);
    else if (c.kind == "dsmc_gradient")
        rc = do_dsmc_gradient(c, dir, timings, outputs);
    else if (c.kind == "validate")
        rc = do_validate(c, dir, timings, outputs);
    else
        throw ConfigError("run_experiment: unknown kind " + c.kind);

    write_run_manifest(c, dir, outputs);
    write_timings(timings, dir);
    return rc;
}

}  // namespace adjmc::harness

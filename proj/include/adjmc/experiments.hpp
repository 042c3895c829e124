// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adjmc/config.hpp"
#include "adjmc/dsmc_adjoint.hpp"
#include "adjmc/rte_adjoint.hpp"
#include "adjmc/rte_fvm.hpp"

namespace adjmc::harness {

/// Wall-clock per phase; kept out of the data CSVs so those stay
/// byte-reproducible.
struct PhaseTimings {
    std::vector<std::pair<std::string, double>> entries;
    void add(const std::string& name, double seconds) { entries.emplace_back(name, seconds); }
};

struct RteGradientReport {
    rte::GradientGrid p_otd;  // mean over repeats, std_err across repeats
    rte::GradientGrid p_dto;
    rte::GradientGrid fvm_ref;  // fine reference restricted to the reporting bins
    bool have_p_otd{false}, have_p_dto{false}, have_fvm{false};
    std::vector<rte::GradientGrid> per_repeat_otd, per_repeat_dto;
};

struct DsmcGradientReport {
    mc::GradientEstimate adjoint;  // value = repeat mean, std_err across repeats
    mc::GradientEstimate fd;
    bool have_adjoint{false}, have_fd{false};
    std::vector<std::vector<double>> per_repeat_adjoint, per_repeat_fd;
    double forward_seconds{0}, adjoint_seconds{0};
};

struct ScalingReport {
    std::vector<long long> n;
    std::vector<std::string> method;            // column names
    std::vector<std::vector<double>> error_std;  // [method][n]
    std::vector<double> slope;                  // per method
};

// Experiment pipelines (library surface of the CLI).
RteGradientReport run_rte_gradient(const ExperimentConfig& config, PhaseTimings* timings = nullptr);
DsmcGradientReport run_dsmc_gradient(const ExperimentConfig& config, PhaseTimings* timings = nullptr);

/// Std dev across repeats of the gradient L2 error for each particle count.
/// Requires at least three particle counts.
ScalingReport scaling_study(const ExperimentConfig& config, const std::vector<long long>& n_list,
                            int repeats);

/// Fast invariant battery behind the `validate` subcommand: (name, passed).
std::vector<std::pair<std::string, bool>> run_validation_suite(std::uint64_t seed);

/// Execute the configured experiment, write CSVs plus run_manifest.txt and
/// timings.csv under config.output_dir. Returns a process exit code.
int run_experiment(const ExperimentConfig& config);

// Shared wiring between experiments and tests.
rte::SigmaField make_sigma_field(const ExperimentConfig& config);
rte::InitialDistribution make_initial_distribution(const ExperimentConfig& config);
double payoff_speed_sq_left(double x, double v);
rte::GradientGrid fine_fvm_reference(const ExperimentConfig& config, int report_bins);
dsmc::CollisionKernel make_kernel(const ExperimentConfig& config);

/// theta -> terminal fourth-moment objective, run through a fresh forward
/// DSMC pipeline seeded from the key (the coupled-FD building block).
mc::RandomObjective dsmc_objective_runner(const ExperimentConfig& config);

/// Largest entrywise mismatch between the forward one-step matrix and the
/// transpose of the backward one-step matrix, assembled via basis vectors.
double fvm_transpose_max_error(const rte::fvm::FvmGrid& grid, const std::vector<double>& sigma);

}  // namespace adjmc::harness

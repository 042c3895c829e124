// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adjmc/rng.hpp"

namespace adjmc::rte {

/// Transport run parameters. The velocity space is the interval
/// [v_lo, v_hi]; scattering redistributes uniformly over it.
struct RteConfig {
    double x_lo{-2.0}, x_hi{2.0};
    double v_lo{-1.0}, v_hi{1.0};
    double t_final{0.5};
    int steps{50};
    long long n_particles{1};
    double rho{1.0};  // total mass carried by the ensemble

    double dt() const { return steps > 0 ? t_final / steps : 0.0; }
    double omega() const { return v_hi - v_lo; }
    void validate() const;
};

/// Piecewise-constant scattering coefficient on a uniform spatial grid; the
/// optimization unknown. Evaluation clamps to the nearest cell so sigma(x)
/// is total even for particles that drift past the grid.
struct SigmaField {
    double x_lo{-2.0}, x_hi{2.0};
    std::vector<double> values;

    static SigmaField from_function(const std::function<double(double)>& f, double x_lo,
                                    double x_hi, int n_cells);
    double cell_width() const { return (x_hi - x_lo) / static_cast<double>(values.size()); }
    int cell_index(double x) const {
        const int n = static_cast<int>(values.size());
        int i = static_cast<int>(std::floor((x - x_lo) / cell_width()));
        return i < 0 ? 0 : (i >= n ? n - 1 : i);
    }
    double operator()(double x) const { return values[static_cast<std::size_t>(cell_index(x))]; }
    void validate() const;
};

/// Initial phase-space density: a Gaussian mixture in x times the uniform
/// density in v. Weights are renormalized so the spatial part has mass 1.
struct InitialDistribution {
    struct Component {
        double weight{1.0};
        double center{0.0};
        double width{1.0};  // standard deviation
    };
    std::vector<Component> spatial;

    /// Two unit-weight humps at +/-offset, the stock test profile.
    static InitialDistribution gaussian_pair(double offset, double width);
    void validate() const;
    double spatial_density(double x) const;
};

struct InitialStates {
    std::vector<double> x, v;
};

/// Per-step phase-space history of the whole ensemble plus the scatter flags
/// and cached acceptance probabilities; the substrate both adjoint gradients
/// replay. Arrays are level-major: entry (m, n) lives at m * n_particles + n.
struct ParticleTrajectoryTape {
    long long n_particles{0};
    int steps{0};
    double dt{0};
    RteConfig config;
    std::uint64_t seed{0};

    std::vector<double> x, v;           // levels 0..M
    std::vector<std::uint8_t> scattered;  // steps 1..M, index (m-1)*N + n
    std::vector<double> alpha;            // same indexing as scattered

    double xat(int m, long long n) const { return x[static_cast<std::size_t>(m) * n_particles + n]; }
    double vat(int m, long long n) const { return v[static_cast<std::size_t>(m) * n_particles + n]; }
    bool scattered_at(int m, long long n) const {
        return scattered[static_cast<std::size_t>(m - 1) * n_particles + n] != 0;
    }
    double alpha_at(int m, long long n) const {
        return alpha[static_cast<std::size_t>(m - 1) * n_particles + n];
    }
};

/// N i.i.d. draws from the initial distribution.
InitialStates sample_initial(const RteConfig& config, const InitialDistribution& f0,
                             std::uint64_t seed);

/// Forward transport-scattering sweep. Per step: free streaming
/// x <- x + dt v, then with probability 1 - exp(-sigma(x_new) dt) the
/// velocity is resampled uniformly on the velocity interval. The scatter
/// decision is recorded explicitly; downstream weights must branch on the
/// flag, never on velocity equality.
ParticleTrajectoryTape run_forward(const RteConfig& config, const SigmaField& sigma,
                                   const InitialStates& initial, std::uint64_t seed);

/// rho/N sum r(x_n^M, v_n^M).
double objective_final(const ParticleTrajectoryTape& tape,
                       const std::function<double(double, double)>& r);

void save_tape(const ParticleTrajectoryTape& tape, const std::string& path);
ParticleTrajectoryTape load_tape(const std::string& path);

/// Final-time histograms of x and v (columns: variable, bin_center, density).
void write_final_marginals_csv(const ParticleTrajectoryTape& tape, const std::string& path,
                               int bins);

}  // namespace adjmc::rte

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "adjmc/rte_forward.hpp"

namespace adjmc::rte {

/// Gradient of the objective with respect to the scattering field, reported
/// as bin averages over a uniform spatial grid. std_err is filled by callers
/// that aggregate repeated runs; a single evaluation leaves it empty.
struct GradientGrid {
    double x_lo{-2.0}, x_hi{2.0};
    int bins{0};
    std::vector<double> value;
    std::vector<double> std_err;
    std::vector<std::uint8_t> always_empty;  // bin never saw a particle

    GradientGrid() = default;
    GradientGrid(double lo, double hi, int n) : x_lo(lo), x_hi(hi), bins(n), value(static_cast<std::size_t>(n), 0.0) {}

    static GradientGrid like(const SigmaField& sigma) {
        return GradientGrid(sigma.x_lo, sigma.x_hi, static_cast<int>(sigma.values.size()));
    }
    double bin_width() const { return (x_hi - x_lo) / bins; }
    double bin_center(int j) const { return x_lo + (j + 0.5) * bin_width(); }
    /// -1 when x falls outside the reporting window.
    int bin_index(double x) const {
        const int j = static_cast<int>(std::floor((x - x_lo) / bin_width()));
        return (j >= 0 && j < bins) ? j : -1;
    }
};

/// Terminal adjoint weights psi_n = -r(x_n^M, v_n^M); the adjoint value is
/// constant along each forward trajectory.
std::vector<double> terminal_adjoint_weights(const ParticleTrajectoryTape& tape,
                                             const std::function<double(double, double)>& r);

/// Weighted-particle adjoint gradient. Per bin Q_j, per time level, the
/// estimate pairs the empirical measure against a piecewise-constant
/// reconstruction of the adjoint on an (x-bin, v-bin) grid:
///
///   grad_j = dt/(N |Q_j|) * sum_m [ sum_{n in Q_j} psi_n
///            - count_j * <lambda_j>_v / |Omega| ]
///
/// where <lambda_j>_v integrates the cell averages of psi with midpoint
/// weights; empty v-cells inherit the average of their nearest occupied
/// v-neighbors in the same x-bin. The reconstruction is the one
/// approximation knob of the method.
GradientGrid p_otd_gradient(const ParticleTrajectoryTape& tape, const std::vector<double>& weights,
                            const GradientGrid& grid, int v_bins = 20);

/// Score-function adjoint gradient, using only taped scatter flags, cached
/// acceptance probabilities and terminal payoffs:
///
///   grad_j = dt/(N |Q_j|) * sum_n sum_m 1{x_n^m in Q_j} r(x_n^M, v_n^M) xi_n^m,
///   xi_n^m = -1 when step m kept the velocity, alpha/(1 - alpha) when it
///   scattered.
GradientGrid p_dto_gradient(const ParticleTrajectoryTape& tape,
                            const std::function<double(double, double)>& r,
                            const GradientGrid& grid);

/// Average fine bins onto a coarser grid with an integer refinement ratio.
GradientGrid restrict_bins(const GradientGrid& fine, int coarse_bins);

}  // namespace adjmc::rte

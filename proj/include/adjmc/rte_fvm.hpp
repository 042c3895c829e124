// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "adjmc/rte_adjoint.hpp"
#include "adjmc/rte_forward.hpp"

namespace adjmc::rte::fvm {

/// Uniform phase-space grid for the deterministic reference solver.
/// Velocity cell centers sit at v_lo + (j + 1/2) dv.
struct FvmGrid {
    double x_lo{-2.0}, x_hi{2.0};
    double v_lo{-1.0}, v_hi{1.0};
    int nx{80}, nv{40};
    int steps{50};
    double t_final{0.5};

    double dx() const { return (x_hi - x_lo) / nx; }
    double dv() const { return (v_hi - v_lo) / nv; }
    double dt() const { return steps > 0 ? t_final / steps : 0.0; }
    double omega() const { return v_hi - v_lo; }
    double x_center(int i) const { return x_lo + (i + 0.5) * dx(); }
    double v_center(int j) const { return v_lo + (j + 0.5) * dv(); }
    /// Throws ConfigError on CFL violation (max |v| dt / dx must be <= 1).
    void validate() const;
};

using Field = std::vector<double>;  // nx * nv, index i * nv + j

/// One explicit upwind transport-collision step (outflow boundaries: ghost
/// cells hold zero).
Field forward_step(const FvmGrid& grid, const std::vector<double>& sigma, const Field& f);

/// Exact transpose of forward_step: flipped upwind stencil, collision source
/// from the incoming (later-time) level. The backward one-step operator is
/// the matrix transpose of the forward one, which pins the discrete gradient
/// below to the true derivative of the discrete objective.
Field adjoint_step(const FvmGrid& grid, const std::vector<double>& sigma, const Field& lambda_next);

/// All time levels 0..M of the forward solve.
std::vector<Field> fvm_forward(const FvmGrid& grid, const std::vector<double>& sigma,
                               const Field& f0);

/// All time levels 0..M of the adjoint solve, marching from the supplied
/// terminal condition down to level 0.
std::vector<Field> fvm_adjoint(const FvmGrid& grid, const std::vector<double>& sigma,
                               const Field& lambda_final);

/// Per-cell gradient density, pairing lambda^{m+1} with f^m as in the
/// discrete schemes' source terms:
///
///   g_i = sum_m dt [ sum_j lambda^{m+1}_{ij} f^m_{ij} dv
///                    - (sum_j f^m_{ij} dv)(sum_j lambda^{m+1}_{ij} dv)/|Omega| ]
///
/// g_i equals (1/dx) d(discrete objective)/d(sigma_i) exactly.
GradientGrid fvm_gradient(const std::vector<Field>& f_levels,
                          const std::vector<Field>& lambda_levels, const FvmGrid& grid);

Field initial_field(const FvmGrid& grid, const InitialDistribution& f0);
Field terminal_adjoint_field(const FvmGrid& grid, const std::function<double(double, double)>& r);
double discrete_objective(const FvmGrid& grid, const Field& f_final,
                          const std::function<double(double, double)>& r);
std::vector<double> sigma_on_grid(const FvmGrid& grid, const std::function<double(double)>& sigma);

}  // namespace adjmc::rte::fvm

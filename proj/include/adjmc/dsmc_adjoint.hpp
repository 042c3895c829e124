// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "adjmc/dsmc_forward.hpp"
#include "adjmc/mc_gradients.hpp"
#include "adjmc/rng.hpp"
#include "adjmc/vec3.hpp"

namespace adjmc::dsmc {

/// Adjoint vectors gamma_i at the level the sweep has reached, alongside
/// the cached terminal payoffs and the velocity ensemble reconstructed at
/// that level.
struct AdjointEnsemble {
    std::vector<Vec3> gamma;
    std::vector<double> phi_final;
    std::vector<Vec3> velocities;
    int level{0};
};

struct SweepDiagnostics {
    std::vector<double> gamma_sq_norm;  // sum_i |gamma_i|^2, levels from start down to 0
};

/// Backward sweep of the discrete adjoint recursion over a recorded tape.
///
/// Final data: gamma_i = (rho/N) dphi(v_i) at the starting level. Per taped
/// pair, marching k downward:
///   - real collision: pre-collision velocities are rebuilt by the inverse
///     collision map B = A^T, the gamma pair is transported by the same
///     B action, and the score term
///     (rho/N)(phi_i + phi_i1) q^{-1} dq/dg lands with opposite signs on
///     the two partners;
///   - virtual-only: velocities and gamma transport are identity and the
///     score factor is -(Sigma - q)^{-1} dq/dg;
///   - unpaired particles carry gamma through unchanged.
///
/// `ensemble` must be the forward state at `from_level` (default: the final
/// ensemble at tape.steps).
AdjointEnsemble adjoint_sweep(const CollisionTape& tape, const VelocityEnsemble& ensemble,
                              const CollisionKernel& kernel,
                              const std::function<double(const Vec3&)>& phi,
                              const std::function<Vec3(const Vec3&)>& dphi, int from_level = -1,
                              SweepDiagnostics* diagnostics = nullptr);

/// Parameterized initial condition: a pushforward of stored standard-normal
/// base draws. The draws used to initialize the forward run must be kept
/// for the gradient.
struct InitialConditionModel {
    std::vector<double> theta;
    std::function<Vec3(const Vec3&, const std::vector<double>&)> pushforward;
    /// dT/dtheta_j for every j, evaluated at (eps, theta).
    std::function<std::vector<Vec3>(const Vec3&, const std::vector<double>&)> jacobian;
    std::vector<Vec3> eps;

    /// Diagonal Gaussian with temperatures theta = (T_x, T_y, T_z):
    /// T(eps, theta) = (sqrt(T_x) eps_x, sqrt(T_y) eps_y, sqrt(T_z) eps_z).
    static InitialConditionModel diagonal_gaussian(double tx, double ty, double tz);
};

/// Draw N initial velocities through the pushforward, storing the base draws
/// on the model.
VelocityEnsemble sample_initial_velocities(InitialConditionModel& ic, long long n,
                                           std::uint64_t seed);

/// D_theta J ~= sum_i gamma_i^0 . dT/dtheta(eps_i, theta), with the standard
/// error taken over per-particle contributions.
mc::GradientEstimate initial_condition_gradient(const AdjointEnsemble& adjoint,
                                                const InitialConditionModel& ic);

/// Coupled finite differences of a full forward pipeline; a thin delegate
/// kept so DSMC callers get the reference gradient through one call.
mc::GradientEstimate fd_reference_gradient(const mc::RandomObjective& runner,
                                           const std::vector<double>& theta,
                                           const mc::FdOptions& options, std::uint64_t seed);

}  // namespace adjmc::dsmc

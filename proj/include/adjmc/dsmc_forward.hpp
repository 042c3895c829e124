// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adjmc/rng.hpp"
#include "adjmc/vec3.hpp"

namespace adjmc::dsmc {

/// Binary collision kernel q(g, sphere) with its velocity-space gradient
/// dq/dg and a majorant used for rejection sampling. For the maxwellian
/// kind, q = 1/(4 pi) with zero gradient; for vhs, q = C |g|^beta.
struct CollisionKernel {
    enum class Kind { maxwellian, vhs, custom };

    Kind kind{Kind::maxwellian};
    double vhs_c{1.0};
    double vhs_beta{0.0};
    std::function<double(const Vec3&, const Vec3&)> eval_fn;
    std::function<Vec3(const Vec3&, const Vec3&)> grad_fn;
    double bound{1.0 / (4.0 * M_PI)};  // Sigma, refreshed per run for vhs

    double evaluate(const Vec3& g, const Vec3& sphere) const;
    Vec3 grad_g(const Vec3& g, const Vec3& sphere) const;

    static CollisionKernel maxwellian();
    static CollisionKernel vhs(double c, double beta);

    /// Majorant with 10% headroom over the coarse pair bound 2 max|v|.
    void refresh_bound(const std::vector<Vec3>& velocities);
};

struct VelocityEnsemble {
    std::vector<Vec3> v;
    double rho{1.0};
    long long size() const { return static_cast<long long>(v.size()); }
};

/// One virtual collision pair: indices, the sampled sphere direction, the
/// pre-collision relative direction (needed to invert the collision map in
/// the backward sweep), the kernel value at selection time and the
/// accept/reject outcome. Pre-collision velocities are never stored; the
/// sweep reconstructs them.
struct PairRecord {
    std::uint32_t i{0}, i1{0};
    Vec3 sphere;
    Vec3 rel_dir;
    double q{0};
    std::uint8_t real_collision{0};
};

struct StepRecord {
    double mu{0};
    double bound{0};
    std::uint64_t pair_begin{0};
    std::uint32_t pair_count{0};
};

struct CollisionTape {
    long long n_particles{0};
    int steps{0};
    double dt{0};
    std::uint64_t seed{0};
    CollisionKernel::Kind kernel_kind{CollisionKernel::Kind::maxwellian};
    double vhs_c{0}, vhs_beta{0};
    int bound_refreshes{0};

    std::vector<StepRecord> step;
    std::vector<PairRecord> pairs;
};

using Mat6 = std::array<double, 36>;  // row-major

/// The linear collision map A(sphere, rel_dir) acting on the stacked pair
/// (v, v1), and B = A^T. B inverts A on pairs whose relative direction is
/// rel_dir (which is how collisions always apply it); as plain matrices the
/// pair satisfies B A = A B = identity only on that manifold.
std::pair<Mat6, Mat6> collision_matrices(const Vec3& sphere, const Vec3& rel_dir);

/// Advance one step: select ceil(dt mu N / 2) disjoint pairs by a keyed
/// partial shuffle, rejection-sample real collisions against the majorant,
/// apply the momentum/energy conserving collision rule, and append every
/// pair to the tape. If a kernel value exceeds the majorant the step is
/// retried from scratch with an enlarged bound (and the retry counted on
/// the tape). Throws ConfigError when dt * mu > 1.
void dsmc_step(VelocityEnsemble& ensemble, CollisionKernel& kernel, double dt, std::uint64_t seed,
               int step_index, CollisionTape& tape);

struct DsmcRunResult {
    VelocityEnsemble ensemble;
    CollisionTape tape;
    std::vector<std::pair<int, VelocityEnsemble>> snapshots;
};

/// M steps with deterministic per-step keys. snapshot_levels (ascending)
/// requests copies of the ensemble at those step counts.
DsmcRunResult run_dsmc(VelocityEnsemble initial, CollisionKernel kernel, double dt, int steps,
                       std::uint64_t seed, const std::vector<int>& snapshot_levels = {});

/// rho/N sum phi(v_i).
double objective_phi(const VelocityEnsemble& ensemble, const std::function<double(const Vec3&)>& phi);

void save_tape(const CollisionTape& tape, const std::string& path);
CollisionTape load_tape(const std::string& path);

/// Time series of directional second moments and the raw fourth moment of
/// v_x (columns t, T_x, T_y, T_z, m4x).
void write_moments_csv(const std::vector<std::pair<double, VelocityEnsemble>>& series,
                       const std::string& path);

}  // namespace adjmc::dsmc

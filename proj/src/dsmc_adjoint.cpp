// SPDX-License-Identifier: Apache-2.0
#include "adjmc/dsmc_adjoint.hpp"

#include <cmath>

#include "adjmc/errors.hpp"
#include "adjmc/stats.hpp"

namespace adjmc::dsmc {

AdjointEnsemble adjoint_sweep(const CollisionTape& tape, const VelocityEnsemble& ensemble,
                              const CollisionKernel& kernel,
                              const std::function<double(const Vec3&)>& phi,
                              const std::function<Vec3(const Vec3&)>& dphi, int from_level,
                              SweepDiagnostics* diagnostics) {
    const long long n = tape.n_particles;
    if (ensemble.size() != n)
        throw std::invalid_argument("adjoint_sweep: ensemble size does not match tape");
    const int start = from_level < 0 ? tape.steps : from_level;
    if (start > tape.steps || static_cast<std::size_t>(start) > tape.step.size())
        throw std::invalid_argument("adjoint_sweep: starting level beyond tape");

    AdjointEnsemble adj;
    adj.level = start;
    adj.velocities = ensemble.v;
    adj.phi_final.resize(static_cast<std::size_t>(n));
    adj.gamma.resize(static_cast<std::size_t>(n));
    const double weight = ensemble.rho / static_cast<double>(n);
    for (long long i = 0; i < n; ++i) {
        adj.phi_final[static_cast<std::size_t>(i)] = phi(ensemble.v[static_cast<std::size_t>(i)]);
        adj.gamma[static_cast<std::size_t>(i)] = weight * dphi(ensemble.v[static_cast<std::size_t>(i)]);
    }

    auto record_norm = [&] {
        if (!diagnostics) return;
        double s = 0;
        for (const auto& g : adj.gamma) s += norm_sq(g);
        diagnostics->gamma_sq_norm.push_back(s);
    };
    record_norm();

    for (int k = start - 1; k >= 0; --k) {
        const StepRecord& step = tape.step[static_cast<std::size_t>(k)];
        for (std::uint64_t l = step.pair_begin; l < step.pair_begin + step.pair_count; ++l) {
            const PairRecord& pr = tape.pairs[static_cast<std::size_t>(l)];
            Vec3& vi = adj.velocities[pr.i];
            Vec3& vi1 = adj.velocities[pr.i1];
            Vec3& gi = adj.gamma[pr.i];
            Vec3& gi1 = adj.gamma[pr.i1];

            Vec3 score_dir;
            if (pr.real_collision) {
                // invert the collision: (v, v1) = B (v', v1') with
                // B w = ( (w+w1)/2 + rel_dir (sphere.(w-w1))/2 , ... )
                const Vec3 v_center = 0.5 * (vi + vi1);
                const double g_len = dot(pr.sphere, vi - vi1);  // = |g| on the collision manifold
                vi = v_center + (0.5 * g_len) * pr.rel_dir;
                vi1 = v_center - (0.5 * g_len) * pr.rel_dir;

                const Vec3 g_center = 0.5 * (gi + gi1);
                const double g_proj = dot(pr.sphere, gi - gi1);
                gi = g_center + (0.5 * g_proj) * pr.rel_dir;
                gi1 = g_center - (0.5 * g_proj) * pr.rel_dir;

                if (!(pr.q > 0)) throw TapeError("adjoint_sweep: real collision with q <= 0");
                score_dir = (1.0 / pr.q) * kernel.grad_g(vi - vi1, pr.sphere);
            } else {
                if (pr.q >= step.bound)
                    throw TapeError("adjoint_sweep: virtual-only record with q = Sigma");
                score_dir = (-1.0 / (step.bound - pr.q)) * kernel.grad_g(vi - vi1, pr.sphere);
            }

            const double payoff_sum = weight * (adj.phi_final[pr.i] + adj.phi_final[pr.i1]);
            gi += payoff_sum * score_dir;
            gi1 -= payoff_sum * score_dir;
        }
        record_norm();
    }
    adj.level = 0;
    return adj;
}

InitialConditionModel InitialConditionModel::diagonal_gaussian(double tx, double ty, double tz) {
    InitialConditionModel ic;
    ic.theta = {tx, ty, tz};
    ic.pushforward = [](const Vec3& eps, const std::vector<double>& th) {
        return Vec3{std::sqrt(th[0]) * eps.x, std::sqrt(th[1]) * eps.y, std::sqrt(th[2]) * eps.z};
    };
    ic.jacobian = [](const Vec3& eps, const std::vector<double>& th) {
        return std::vector<Vec3>{{eps.x / (2.0 * std::sqrt(th[0])), 0, 0},
                                 {0, eps.y / (2.0 * std::sqrt(th[1])), 0},
                                 {0, 0, eps.z / (2.0 * std::sqrt(th[2]))}};
    };
    return ic;
}

VelocityEnsemble sample_initial_velocities(InitialConditionModel& ic, long long n,
                                           std::uint64_t seed) {
    VelocityEnsemble ens;
    ens.v.resize(static_cast<std::size_t>(n));
    ic.eps.resize(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
        const StreamKey key{seed, streams::make(streams::dsmc_init, static_cast<std::uint64_t>(i)), 0};
        ic.eps[static_cast<std::size_t>(i)] = sample_standard_normal3(key);
        ens.v[static_cast<std::size_t>(i)] = ic.pushforward(ic.eps[static_cast<std::size_t>(i)], ic.theta);
    }
    return ens;
}

mc::GradientEstimate initial_condition_gradient(const AdjointEnsemble& adjoint,
                                                const InitialConditionModel& ic) {
    const std::size_t n = adjoint.gamma.size();
    if (ic.eps.size() != n)
        throw std::logic_error(
            "initial_condition_gradient: model has no stored base draws for this ensemble");
    const std::size_t m = ic.theta.size();
    std::vector<MeanVar> acc(m);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<Vec3> jac = ic.jacobian(ic.eps[i], ic.theta);
        for (std::size_t j = 0; j < m; ++j)
            acc[j].add(static_cast<double>(n) * dot(adjoint.gamma[i], jac[j]));
    }
    mc::GradientEstimate out;
    out.method = mc::Method::pathwise;
    out.n_samples = static_cast<long long>(n);
    for (const auto& a : acc) {
        out.value.push_back(a.mean);  // mean of n * contrib == sum of contribs
        out.std_err.push_back(a.std_err());
    }
    return out;
}

mc::GradientEstimate fd_reference_gradient(const mc::RandomObjective& runner,
                                           const std::vector<double>& theta,
                                           const mc::FdOptions& options, std::uint64_t seed) {
    return mc::coupled_fd_gradient(runner, theta, options, seed);
}

}  // namespace adjmc::dsmc

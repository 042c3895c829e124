// SPDX-License-Identifier: Apache-2.0
#include "adjmc/rte_adjoint.hpp"

#include <cmath>

#include "adjmc/errors.hpp"

namespace adjmc::rte {

std::vector<double> terminal_adjoint_weights(const ParticleTrajectoryTape& tape,
                                             const std::function<double(double, double)>& r) {
    std::vector<double> psi(static_cast<std::size_t>(tape.n_particles));
    const double* x = tape.x.data() + static_cast<std::size_t>(tape.steps) * tape.n_particles;
    const double* v = tape.v.data() + static_cast<std::size_t>(tape.steps) * tape.n_particles;
    for (long long n = 0; n < tape.n_particles; ++n)
        psi[static_cast<std::size_t>(n)] = -r(x[n], v[n]);
    return psi;
}

GradientGrid p_otd_gradient(const ParticleTrajectoryTape& tape, const std::vector<double>& weights,
                            const GradientGrid& grid, int v_bins) {
    if (static_cast<long long>(weights.size()) != tape.n_particles)
        throw std::invalid_argument("p_otd_gradient: weight count does not match tape");
    if (v_bins < 1) throw std::invalid_argument("p_otd_gradient: v_bins must be >= 1");

    GradientGrid out = grid;
    const std::size_t n_bins = static_cast<std::size_t>(grid.bins);
    out.value.assign(n_bins, 0.0);
    out.always_empty.assign(n_bins, 1);

    const long long n_p = tape.n_particles;
    const double v_lo = tape.config.v_lo;
    const double omega = tape.config.omega();
    const double dv_bin = omega / v_bins;
    const double inv_dv = 1.0 / dv_bin;

    std::vector<double> count(n_bins), sum_psi(n_bins);
    std::vector<double> cell_count(n_bins * static_cast<std::size_t>(v_bins));
    std::vector<double> cell_sum(n_bins * static_cast<std::size_t>(v_bins));
    std::vector<double> lambda_cell(static_cast<std::size_t>(v_bins));

    for (int m = 1; m <= tape.steps; ++m) {
        std::fill(count.begin(), count.end(), 0.0);
        std::fill(sum_psi.begin(), sum_psi.end(), 0.0);
        std::fill(cell_count.begin(), cell_count.end(), 0.0);
        std::fill(cell_sum.begin(), cell_sum.end(), 0.0);

        const double* x = tape.x.data() + static_cast<std::size_t>(m) * n_p;
        const double* v = tape.v.data() + static_cast<std::size_t>(m) * n_p;
        for (long long n = 0; n < n_p; ++n) {
            const int j = out.bin_index(x[n]);
            if (j < 0) continue;
            int b = static_cast<int>((v[n] - v_lo) * inv_dv);
            b = b < 0 ? 0 : (b >= v_bins ? v_bins - 1 : b);
            const double psi = weights[static_cast<std::size_t>(n)];
            count[static_cast<std::size_t>(j)] += 1.0;
            sum_psi[static_cast<std::size_t>(j)] += psi;
            cell_count[static_cast<std::size_t>(j) * v_bins + b] += 1.0;
            cell_sum[static_cast<std::size_t>(j) * v_bins + b] += psi;
        }

        for (std::size_t j = 0; j < n_bins; ++j) {
            if (count[j] == 0.0) continue;
            out.always_empty[j] = 0;

            // cell averages of psi; empty v-cells take the mean of the
            // nearest occupied neighbors below and above
            const double* cc = cell_count.data() + j * static_cast<std::size_t>(v_bins);
            const double* cs = cell_sum.data() + j * static_cast<std::size_t>(v_bins);
            for (int b = 0; b < v_bins; ++b)
                lambda_cell[static_cast<std::size_t>(b)] = cc[b] > 0 ? cs[b] / cc[b] : 0.0;
            for (int b = 0; b < v_bins; ++b) {
                if (cc[b] > 0) continue;
                double acc = 0;
                int hits = 0;
                for (int lo = b - 1; lo >= 0; --lo)
                    if (cc[lo] > 0) {
                        acc += lambda_cell[static_cast<std::size_t>(lo)];
                        ++hits;
                        break;
                    }
                for (int hi = b + 1; hi < v_bins; ++hi)
                    if (cc[hi] > 0) {
                        acc += lambda_cell[static_cast<std::size_t>(hi)];
                        ++hits;
                        break;
                    }
                lambda_cell[static_cast<std::size_t>(b)] = hits ? acc / hits : 0.0;
            }

            double lambda_v_integral = 0;  // midpoint rule over the v interval
            for (int b = 0; b < v_bins; ++b) lambda_v_integral += lambda_cell[static_cast<std::size_t>(b)] * dv_bin;

            out.value[j] += sum_psi[j] - count[j] * lambda_v_integral / omega;
        }
    }

    const double scale = tape.dt / (static_cast<double>(n_p) * out.bin_width());
    for (double& g : out.value) g *= scale;
    return out;
}

GradientGrid p_dto_gradient(const ParticleTrajectoryTape& tape,
                            const std::function<double(double, double)>& r,
                            const GradientGrid& grid) {
    GradientGrid out = grid;
    const std::size_t n_bins = static_cast<std::size_t>(grid.bins);
    out.value.assign(n_bins, 0.0);
    out.always_empty.assign(n_bins, 1);

    const long long n_p = tape.n_particles;
    const double* xM = tape.x.data() + static_cast<std::size_t>(tape.steps) * n_p;
    const double* vM = tape.v.data() + static_cast<std::size_t>(tape.steps) * n_p;
    std::vector<double> payoff(static_cast<std::size_t>(n_p));
    for (long long n = 0; n < n_p; ++n) payoff[static_cast<std::size_t>(n)] = r(xM[n], vM[n]);

    for (int m = 1; m <= tape.steps; ++m) {
        const double* x = tape.x.data() + static_cast<std::size_t>(m) * n_p;
        const std::uint8_t* flag = tape.scattered.data() + static_cast<std::size_t>(m - 1) * n_p;
        const double* alpha = tape.alpha.data() + static_cast<std::size_t>(m - 1) * n_p;
        for (long long n = 0; n < n_p; ++n) {
            const int j = out.bin_index(x[n]);
            if (j < 0) continue;
            out.always_empty[static_cast<std::size_t>(j)] = 0;
            double xi;
            if (flag[n]) {
                const double a = alpha[n];
                if (a >= 1.0)
                    throw TapeError("p_dto_gradient: scattered step with alpha = 1 (zero-rate cell)");
                xi = a / (1.0 - a);
            } else {
                xi = -1.0;
            }
            out.value[static_cast<std::size_t>(j)] += payoff[static_cast<std::size_t>(n)] * xi;
        }
    }

    const double scale = tape.dt / (static_cast<double>(n_p) * out.bin_width());
    for (double& g : out.value) g *= scale;
    return out;
}

GradientGrid restrict_bins(const GradientGrid& fine, int coarse_bins) {
    if (coarse_bins < 1 || fine.bins % coarse_bins != 0)
        throw std::invalid_argument("restrict_bins: refinement ratio must be a positive integer");
    const int ratio = fine.bins / coarse_bins;
    GradientGrid out(fine.x_lo, fine.x_hi, coarse_bins);
    for (int j = 0; j < coarse_bins; ++j) {
        double acc = 0;
        for (int k = 0; k < ratio; ++k) acc += fine.value[static_cast<std::size_t>(j * ratio + k)];
        out.value[static_cast<std::size_t>(j)] = acc / ratio;
    }
    return out;
}

}  // namespace adjmc::rte

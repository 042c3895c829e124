// SPDX-License-Identifier: Apache-2.0
#include "adjmc/rte_fvm.hpp"

#include <algorithm>
#include <cmath>

#include "adjmc/errors.hpp"

namespace adjmc::rte::fvm {

void FvmGrid::validate() const {
    if (nx < 1 || nv < 1) throw ConfigError("fvm: grid must have at least one cell per dimension");
    if (steps < 0) throw ConfigError("fvm: steps must be >= 0");
    if (!(x_lo < x_hi) || !(v_lo < v_hi)) throw ConfigError("fvm: empty domain");
    const double vmax = std::max(std::abs(v_lo), std::abs(v_hi));
    if (steps > 0 && vmax * dt() / dx() > 1.0 + 1e-12)
        throw ConfigError("fvm: CFL violation, max|v| dt/dx > 1");
}

Field forward_step(const FvmGrid& grid, const std::vector<double>& sigma, const Field& f) {
    const int nx = grid.nx, nv = grid.nv;
    const double r = grid.dt() / grid.dx();
    const double dv = grid.dv();
    const double inv_omega = 1.0 / grid.omega();
    const double dt = grid.dt();
    Field out(static_cast<std::size_t>(nx) * nv);

    for (int i = 0; i < nx; ++i) {
        double favg = 0;
        const double* fi = f.data() + static_cast<std::size_t>(i) * nv;
        for (int j = 0; j < nv; ++j) favg += fi[j] * dv;
        const double gain = sigma[static_cast<std::size_t>(i)] * dt * favg * inv_omega;
        for (int j = 0; j < nv; ++j) {
            const double v = grid.v_center(j);
            const double vp = std::max(v, 0.0), vm = std::min(v, 0.0);
            const double f_im = i > 0 ? f[static_cast<std::size_t>(i - 1) * nv + j] : 0.0;
            const double f_ip = i + 1 < nx ? f[static_cast<std::size_t>(i + 1) * nv + j] : 0.0;
            const double fc = fi[j];
            out[static_cast<std::size_t>(i) * nv + j] =
                fc - r * (vp * (fc - f_im) + vm * (f_ip - fc)) + gain -
                sigma[static_cast<std::size_t>(i)] * dt * fc;
        }
    }
    return out;
}

Field adjoint_step(const FvmGrid& grid, const std::vector<double>& sigma, const Field& lambda_next) {
    const int nx = grid.nx, nv = grid.nv;
    const double r = grid.dt() / grid.dx();
    const double dv = grid.dv();
    const double inv_omega = 1.0 / grid.omega();
    const double dt = grid.dt();
    Field out(static_cast<std::size_t>(nx) * nv);

    for (int i = 0; i < nx; ++i) {
        double lavg = 0;
        const double* li = lambda_next.data() + static_cast<std::size_t>(i) * nv;
        for (int j = 0; j < nv; ++j) lavg += li[j] * dv;
        const double gain = sigma[static_cast<std::size_t>(i)] * dt * lavg * inv_omega;
        for (int j = 0; j < nv; ++j) {
            const double v = grid.v_center(j);
            const double vp = std::max(v, 0.0), vm = std::min(v, 0.0);
            const double l_im = i > 0 ? lambda_next[static_cast<std::size_t>(i - 1) * nv + j] : 0.0;
            const double l_ip = i + 1 < nx ? lambda_next[static_cast<std::size_t>(i + 1) * nv + j] : 0.0;
            const double lc = li[j];
            out[static_cast<std::size_t>(i) * nv + j] =
                lc + r * (vp * (l_ip - lc) + vm * (lc - l_im)) + gain -
                sigma[static_cast<std::size_t>(i)] * dt * lc;
        }
    }
    return out;
}

std::vector<Field> fvm_forward(const FvmGrid& grid, const std::vector<double>& sigma,
                               const Field& f0) {
    grid.validate();
    if (sigma.size() != static_cast<std::size_t>(grid.nx))
        throw std::invalid_argument("fvm_forward: sigma size does not match grid");
    std::vector<Field> levels;
    levels.reserve(static_cast<std::size_t>(grid.steps) + 1);
    levels.push_back(f0);
    for (int m = 0; m < grid.steps; ++m) levels.push_back(forward_step(grid, sigma, levels.back()));
    return levels;
}

std::vector<Field> fvm_adjoint(const FvmGrid& grid, const std::vector<double>& sigma,
                               const Field& lambda_final) {
    grid.validate();
    if (sigma.size() != static_cast<std::size_t>(grid.nx))
        throw std::invalid_argument("fvm_adjoint: sigma size does not match grid");
    std::vector<Field> levels(static_cast<std::size_t>(grid.steps) + 1);
    levels[static_cast<std::size_t>(grid.steps)] = lambda_final;
    for (int m = grid.steps - 1; m >= 0; --m)
        levels[static_cast<std::size_t>(m)] =
            adjoint_step(grid, sigma, levels[static_cast<std::size_t>(m + 1)]);
    return levels;
}

GradientGrid fvm_gradient(const std::vector<Field>& f_levels,
                          const std::vector<Field>& lambda_levels, const FvmGrid& grid) {
    const std::size_t n_levels = static_cast<std::size_t>(grid.steps) + 1;
    if (f_levels.size() != n_levels || lambda_levels.size() != n_levels)
        throw std::invalid_argument("fvm_gradient: level count does not match grid");
    const int nx = grid.nx, nv = grid.nv;
    const double dv = grid.dv();
    const double inv_omega = 1.0 / grid.omega();

    GradientGrid out(grid.x_lo, grid.x_hi, nx);
    for (int m = 0; m < grid.steps; ++m) {
        const Field& f = f_levels[static_cast<std::size_t>(m)];
        const Field& l = lambda_levels[static_cast<std::size_t>(m + 1)];
        for (int i = 0; i < nx; ++i) {
            double lf = 0, favg = 0, lavg = 0;
            const double* fi = f.data() + static_cast<std::size_t>(i) * nv;
            const double* li = l.data() + static_cast<std::size_t>(i) * nv;
            for (int j = 0; j < nv; ++j) {
                lf += li[j] * fi[j] * dv;
                favg += fi[j] * dv;
                lavg += li[j] * dv;
            }
            out.value[static_cast<std::size_t>(i)] += grid.dt() * (lf - inv_omega * favg * lavg);
        }
    }
    return out;
}

Field initial_field(const FvmGrid& grid, const InitialDistribution& f0) {
    f0.validate();
    Field f(static_cast<std::size_t>(grid.nx) * grid.nv);
    const double inv_omega = 1.0 / grid.omega();
    for (int i = 0; i < grid.nx; ++i) {
        const double d = f0.spatial_density(grid.x_center(i)) * inv_omega;
        for (int j = 0; j < grid.nv; ++j) f[static_cast<std::size_t>(i) * grid.nv + j] = d;
    }
    return f;
}

Field terminal_adjoint_field(const FvmGrid& grid, const std::function<double(double, double)>& r) {
    Field l(static_cast<std::size_t>(grid.nx) * grid.nv);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.nv; ++j)
            l[static_cast<std::size_t>(i) * grid.nv + j] = -r(grid.x_center(i), grid.v_center(j));
    return l;
}

double discrete_objective(const FvmGrid& grid, const Field& f_final,
                          const std::function<double(double, double)>& r) {
    double j_val = 0;
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.nv; ++j)
            j_val += r(grid.x_center(i), grid.v_center(j)) *
                     f_final[static_cast<std::size_t>(i) * grid.nv + j];
    return j_val * grid.dx() * grid.dv();
}

std::vector<double> sigma_on_grid(const FvmGrid& grid, const std::function<double(double)>& sigma) {
    std::vector<double> s(static_cast<std::size_t>(grid.nx));
    for (int i = 0; i < grid.nx; ++i) s[static_cast<std::size_t>(i)] = sigma(grid.x_center(i));
    return s;
}

}  // namespace adjmc::rte::fvm

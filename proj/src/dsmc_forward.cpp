// SPDX-License-Identifier: Apache-2.0
#include "adjmc/dsmc_forward.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "adjmc/csv.hpp"
#include "adjmc/errors.hpp"

namespace adjmc::dsmc {

double CollisionKernel::evaluate(const Vec3& g, const Vec3& sphere) const {
    switch (kind) {
        case Kind::maxwellian: return 1.0 / (4.0 * M_PI);
        case Kind::vhs: return vhs_c * std::pow(norm(g), vhs_beta);
        case Kind::custom: return eval_fn(g, sphere);
    }
    return 0.0;
}

Vec3 CollisionKernel::grad_g(const Vec3& g, const Vec3& sphere) const {
    switch (kind) {
        case Kind::maxwellian: return {0, 0, 0};
        case Kind::vhs: {
            const double gn = norm(g);
            if (gn == 0.0) return {0, 0, 0};
            return (vhs_c * vhs_beta * std::pow(gn, vhs_beta - 2.0)) * g;
        }
        case Kind::custom: return grad_fn(g, sphere);
    }
    return {0, 0, 0};
}

CollisionKernel CollisionKernel::maxwellian() {
    CollisionKernel k;
    k.kind = Kind::maxwellian;
    k.bound = 1.0 / (4.0 * M_PI);
    return k;
}

CollisionKernel CollisionKernel::vhs(double c, double beta) {
    CollisionKernel k;
    k.kind = Kind::vhs;
    k.vhs_c = c;
    k.vhs_beta = beta;
    k.bound = 0.0;  // set by refresh_bound before the first step
    return k;
}

void CollisionKernel::refresh_bound(const std::vector<Vec3>& velocities) {
    if (kind != Kind::vhs) return;
    double vmax = 0;
    for (const auto& v : velocities) vmax = std::max(vmax, norm(v));
    bound = std::max(bound, 1.1 * vhs_c * std::pow(2.0 * vmax, vhs_beta));
}

std::pair<Mat6, Mat6> collision_matrices(const Vec3& sphere, const Vec3& rel_dir) {
    if (std::abs(norm(sphere) - 1.0) > 1e-10 || std::abs(norm(rel_dir) - 1.0) > 1e-10)
        throw std::invalid_argument("collision_matrices: arguments must be unit vectors");
    Mat6 a{}, b{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const double eye = r == c ? 1.0 : 0.0;
            const double outer = sphere[r] * rel_dir[c];
            const double diag = 0.5 * (eye + outer);
            const double off = 0.5 * (eye - outer);
            a[static_cast<std::size_t>(r * 6 + c)] = diag;
            a[static_cast<std::size_t>(r * 6 + (c + 3))] = off;
            a[static_cast<std::size_t>((r + 3) * 6 + c)] = off;
            a[static_cast<std::size_t>((r + 3) * 6 + (c + 3))] = diag;
        }
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            b[static_cast<std::size_t>(r * 6 + c)] = a[static_cast<std::size_t>(c * 6 + r)];
    return {a, b};
}

namespace {

struct PairDraw {
    std::uint32_t i, i1;
    Vec3 sphere;
    Vec3 rel_dir;
    double q;
};

// disjoint pairs via a partial Fisher-Yates shuffle; exactly 2 n_pairs
// uniforms, addressed by (step, position) so replay never shifts
void select_pairs(long long n, long long n_pairs, std::uint64_t seed, int step_index,
                  std::vector<std::uint32_t>& perm) {
    perm.resize(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0u);
    const StreamKey base{seed, streams::make(streams::dsmc_shuffle, 0),
                         static_cast<std::uint64_t>(step_index) << 32};
    for (long long t = 0; t < 2 * n_pairs; ++t) {
        const double u = uniform01(base.at(base.counter | static_cast<std::uint64_t>(t)));
        long long pick = t + static_cast<long long>(u * static_cast<double>(n - t));
        if (pick >= n) pick = n - 1;
        std::swap(perm[static_cast<std::size_t>(t)], perm[static_cast<std::size_t>(pick)]);
    }
}

}  // namespace

void dsmc_step(VelocityEnsemble& ensemble, CollisionKernel& kernel, double dt, std::uint64_t seed,
               int step_index, CollisionTape& tape) {
    const long long n = ensemble.size();
    if (n % 2 != 0) throw ConfigError("dsmc: particle count must be even");

    constexpr double sphere_area = 4.0 * M_PI;
    std::vector<std::uint32_t> perm;
    std::vector<PairDraw> draws;

    // Selection pass; rerun with an enlarged majorant if any kernel value
    // exceeds it. Nothing is mutated until the pass is clean.
    for (;;) {
        const double mu = sphere_area * kernel.bound * ensemble.rho;
        if (dt * mu > 1.0 + 1e-12)
            throw ConfigError("dsmc: dt * mu > 1; shrink dt or the kernel majorant");
        const long long n_pairs =
            static_cast<long long>(std::ceil(0.5 * dt * mu * static_cast<double>(n)));
        select_pairs(n, n_pairs, seed, step_index, perm);

        draws.clear();
        draws.reserve(static_cast<std::size_t>(n_pairs));
        double q_max = 0;
        const StreamKey pair_base{seed, streams::make(streams::dsmc_pair, 0),
                                  static_cast<std::uint64_t>(step_index) << 32};
        for (long long l = 0; l < n_pairs; ++l) {
            PairDraw d;
            d.i = perm[static_cast<std::size_t>(2 * l)];
            d.i1 = perm[static_cast<std::size_t>(2 * l + 1)];
            d.sphere = sample_unit_sphere(
                pair_base.at(pair_base.counter | static_cast<std::uint64_t>(4 * l)));
            const Vec3 g = ensemble.v[d.i] - ensemble.v[d.i1];
            const double gn = norm(g);
            d.rel_dir = gn > 0 ? (1.0 / gn) * g : Vec3{1, 0, 0};
            d.q = kernel.evaluate(g, d.sphere);
            q_max = std::max(q_max, d.q);
            draws.push_back(d);
        }
        if (q_max <= kernel.bound) break;
        kernel.bound = 1.1 * q_max;
        ++tape.bound_refreshes;
    }

    StepRecord rec;
    rec.mu = sphere_area * kernel.bound * ensemble.rho;
    rec.bound = kernel.bound;
    rec.pair_begin = tape.pairs.size();
    rec.pair_count = static_cast<std::uint32_t>(draws.size());

    const StreamKey pair_base{seed, streams::make(streams::dsmc_pair, 0),
                              static_cast<std::uint64_t>(step_index) << 32};
    for (std::size_t l = 0; l < draws.size(); ++l) {
        const PairDraw& d = draws[l];
        const double xi =
            uniform01(pair_base.at(pair_base.counter | static_cast<std::uint64_t>(4 * l + 2)));
        PairRecord pr;
        pr.i = d.i;
        pr.i1 = d.i1;
        pr.sphere = d.sphere;
        pr.rel_dir = d.rel_dir;
        pr.q = d.q;
        if (xi <= d.q / kernel.bound) {
            const Vec3 vi = ensemble.v[d.i];
            const Vec3 vi1 = ensemble.v[d.i1];
            const Vec3 center = 0.5 * (vi + vi1);
            const double gn = norm(vi - vi1);
            ensemble.v[d.i] = center + (0.5 * gn) * d.sphere;
            ensemble.v[d.i1] = center - (0.5 * gn) * d.sphere;
            pr.real_collision = 1;
        } else {
            pr.real_collision = 0;
        }
        tape.pairs.push_back(pr);
    }
    tape.step.push_back(rec);
}

DsmcRunResult run_dsmc(VelocityEnsemble initial, CollisionKernel kernel, double dt, int steps,
                       std::uint64_t seed, const std::vector<int>& snapshot_levels) {
    if (initial.size() < 2 || initial.size() % 2 != 0)
        throw ConfigError("dsmc: particle count must be even and >= 2");
    kernel.refresh_bound(initial.v);

    DsmcRunResult run;
    run.tape.n_particles = initial.size();
    run.tape.dt = dt;
    run.tape.seed = seed;
    run.tape.kernel_kind = kernel.kind;
    run.tape.vhs_c = kernel.vhs_c;
    run.tape.vhs_beta = kernel.vhs_beta;

    std::size_t next_snap = 0;
    auto snapshot = [&](int level) {
        while (next_snap < snapshot_levels.size() && snapshot_levels[next_snap] == level) {
            run.snapshots.emplace_back(level, initial);
            ++next_snap;
        }
    };

    snapshot(0);
    for (int k = 0; k < steps; ++k) {
        dsmc_step(initial, kernel, dt, seed, k, run.tape);
        snapshot(k + 1);
    }
    run.tape.steps = steps;
    run.ensemble = std::move(initial);
    return run;
}

double objective_phi(const VelocityEnsemble& ensemble,
                     const std::function<double(const Vec3&)>& phi) {
    double sum = 0;
    for (const auto& v : ensemble.v) sum += phi(v);
    return ensemble.rho * sum / static_cast<double>(ensemble.size());
}

namespace {

constexpr std::uint32_t kTapeMagic = 0x44534d31;  // "DSM1"
constexpr std::uint32_t kTapeVersion = 1;

template <class T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_tape(const CollisionTape& tape, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_tape: cannot open " + path);
    put(out, kTapeMagic);
    put(out, kTapeVersion);
    put(out, tape.n_particles);
    put(out, tape.steps);
    put(out, tape.dt);
    put(out, tape.seed);
    put(out, static_cast<std::uint32_t>(tape.kernel_kind));
    put(out, tape.vhs_c);
    put(out, tape.vhs_beta);
    put(out, tape.bound_refreshes);
    const std::uint64_t n_steps = tape.step.size(), n_pairs = tape.pairs.size();
    put(out, n_steps);
    put(out, n_pairs);
    for (const auto& s : tape.step) {
        put(out, s.mu);
        put(out, s.bound);
        put(out, s.pair_begin);
        put(out, s.pair_count);
    }
    for (const auto& p : tape.pairs) {
        put(out, p.i);
        put(out, p.i1);
        put(out, p.sphere);
        put(out, p.rel_dir);
        put(out, p.q);
        put(out, p.real_collision);
    }
    if (!out) throw std::runtime_error("save_tape: write failed for " + path);
}

CollisionTape load_tape(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_tape: cannot open " + path);
    std::uint32_t magic = 0, version = 0;
    get(in, magic);
    get(in, version);
    if (magic != kTapeMagic || version != kTapeVersion)
        throw TapeError("load_tape: bad magic or unsupported version in " + path);
    CollisionTape tape;
    get(in, tape.n_particles);
    get(in, tape.steps);
    get(in, tape.dt);
    get(in, tape.seed);
    std::uint32_t kind = 0;
    get(in, kind);
    tape.kernel_kind = static_cast<CollisionKernel::Kind>(kind);
    get(in, tape.vhs_c);
    get(in, tape.vhs_beta);
    get(in, tape.bound_refreshes);
    std::uint64_t n_steps = 0, n_pairs = 0;
    get(in, n_steps);
    get(in, n_pairs);
    tape.step.resize(n_steps);
    tape.pairs.resize(n_pairs);
    for (auto& s : tape.step) {
        get(in, s.mu);
        get(in, s.bound);
        get(in, s.pair_begin);
        get(in, s.pair_count);
    }
    for (auto& p : tape.pairs) {
        get(in, p.i);
        get(in, p.i1);
        get(in, p.sphere);
        get(in, p.rel_dir);
        get(in, p.q);
        get(in, p.real_collision);
    }
    if (!in) throw TapeError("load_tape: truncated file " + path);
    return tape;
}

void write_moments_csv(const std::vector<std::pair<double, VelocityEnsemble>>& series,
                       const std::string& path) {
    CsvWriter csv(path, {"t", "T_x", "T_y", "T_z", "m4x"});
    for (const auto& [t, ens] : series) {
        double tx = 0, ty = 0, tz = 0, m4 = 0;
        for (const auto& v : ens.v) {
            tx += v.x * v.x;
            ty += v.y * v.y;
            tz += v.z * v.z;
            m4 += v.x * v.x * v.x * v.x;
        }
        const double inv_n = 1.0 / static_cast<double>(ens.size());
        csv.row({csv_double(t), csv_double(tx * inv_n), csv_double(ty * inv_n),
                 csv_double(tz * inv_n), csv_double(m4 * inv_n)});
    }
}

}  // namespace adjmc::dsmc

// SPDX-License-Identifier: Apache-2.0
#include "adjmc/rte_forward.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "adjmc/csv.hpp"
#include "adjmc/errors.hpp"

namespace adjmc::rte {

void RteConfig::validate() const {
    if (n_particles < 1) throw ConfigError("rte: n_particles must be >= 1");
    if (steps < 0) throw ConfigError("rte: steps must be >= 0");
    if (!(v_lo < v_hi)) throw ConfigError("rte: velocity interval is empty");
    if (!(x_lo < x_hi)) throw ConfigError("rte: spatial domain is empty");
    if (!(t_final >= 0)) throw ConfigError("rte: final time must be nonnegative");
}

SigmaField SigmaField::from_function(const std::function<double(double)>& f, double x_lo,
                                     double x_hi, int n_cells) {
    SigmaField s;
    s.x_lo = x_lo;
    s.x_hi = x_hi;
    s.values.resize(static_cast<std::size_t>(n_cells));
    const double dx = (x_hi - x_lo) / n_cells;
    for (int i = 0; i < n_cells; ++i) s.values[static_cast<std::size_t>(i)] = f(x_lo + (i + 0.5) * dx);
    s.validate();
    return s;
}

void SigmaField::validate() const {
    if (values.empty()) throw ConfigError("sigma field: no cells");
    if (!(x_lo < x_hi)) throw ConfigError("sigma field: empty domain");
    for (double v : values)
        if (!(v >= 0)) throw ConfigError("sigma field: values must be nonnegative");
}

InitialDistribution InitialDistribution::gaussian_pair(double offset, double width) {
    InitialDistribution f0;
    f0.spatial = {{0.5, offset, width}, {0.5, -offset, width}};
    return f0;
}

void InitialDistribution::validate() const {
    if (spatial.empty()) throw std::invalid_argument("initial distribution: no components");
    double total = 0;
    for (const auto& c : spatial) {
        if (!(c.weight > 0)) throw std::invalid_argument("initial distribution: weights must be positive");
        if (!(c.width > 0)) throw std::invalid_argument("initial distribution: widths must be positive");
        total += c.weight;
    }
    if (!(total > 0) || !std::isfinite(total))
        throw std::invalid_argument("initial distribution: not normalizable");
}

double InitialDistribution::spatial_density(double x) const {
    double total_w = 0;
    for (const auto& c : spatial) total_w += c.weight;
    double d = 0;
    for (const auto& c : spatial) {
        const double z = (x - c.center) / c.width;
        d += c.weight / total_w * std::exp(-0.5 * z * z) / (c.width * std::sqrt(2.0 * M_PI));
    }
    return d;
}

InitialStates sample_initial(const RteConfig& config, const InitialDistribution& f0,
                             std::uint64_t seed) {
    config.validate();
    f0.validate();
    double total_w = 0;
    for (const auto& c : f0.spatial) total_w += c.weight;

    InitialStates s;
    s.x.resize(static_cast<std::size_t>(config.n_particles));
    s.v.resize(static_cast<std::size_t>(config.n_particles));
    for (long long n = 0; n < config.n_particles; ++n) {
        const StreamKey key{seed, streams::make(streams::rte_init, static_cast<std::uint64_t>(n)), 0};
        // counter 0 picks the mixture component, 1..2 feed the normal draw,
        // 3 is the uniform velocity
        double u = uniform01(key) * total_w;
        std::size_t c = 0;
        while (c + 1 < f0.spatial.size() && u >= f0.spatial[c].weight) {
            u -= f0.spatial[c].weight;
            ++c;
        }
        const double z = standard_normal(key.at(1));
        s.x[static_cast<std::size_t>(n)] = f0.spatial[c].center + f0.spatial[c].width * z;
        s.v[static_cast<std::size_t>(n)] = config.v_lo + config.omega() * uniform01(key.at(3));
    }
    return s;
}

ParticleTrajectoryTape run_forward(const RteConfig& config, const SigmaField& sigma,
                                   const InitialStates& initial, std::uint64_t seed) {
    config.validate();
    sigma.validate();
    const long long n_p = config.n_particles;
    if (static_cast<long long>(initial.x.size()) != n_p ||
        static_cast<long long>(initial.v.size()) != n_p)
        throw std::invalid_argument("run_forward: initial state size does not match config");

    const int m_steps = config.steps;
    const double dt = config.dt();
    const double omega = config.omega();

    ParticleTrajectoryTape tape;
    tape.n_particles = n_p;
    tape.steps = m_steps;
    tape.dt = dt;
    tape.config = config;
    tape.seed = seed;
    tape.x.resize(static_cast<std::size_t>(m_steps + 1) * n_p);
    tape.v.resize(static_cast<std::size_t>(m_steps + 1) * n_p);
    tape.scattered.resize(static_cast<std::size_t>(m_steps) * n_p);
    tape.alpha.resize(static_cast<std::size_t>(m_steps) * n_p);

    std::memcpy(tape.x.data(), initial.x.data(), sizeof(double) * static_cast<std::size_t>(n_p));
    std::memcpy(tape.v.data(), initial.v.data(), sizeof(double) * static_cast<std::size_t>(n_p));

    // sigma is piecewise constant, so the acceptance probability is a small
    // per-cell table; the cached tape alphas are bit-identical to the values
    // used in the scatter decisions.
    std::vector<double> cell_alpha(sigma.values.size());
    for (std::size_t i = 0; i < sigma.values.size(); ++i)
        cell_alpha[i] = std::exp(-sigma.values[i] * dt);

    for (int m = 1; m <= m_steps; ++m) {
        const double* x_old = tape.x.data() + static_cast<std::size_t>(m - 1) * n_p;
        const double* v_old = tape.v.data() + static_cast<std::size_t>(m - 1) * n_p;
        double* x_new = tape.x.data() + static_cast<std::size_t>(m) * n_p;
        double* v_new = tape.v.data() + static_cast<std::size_t>(m) * n_p;
        std::uint8_t* flag = tape.scattered.data() + static_cast<std::size_t>(m - 1) * n_p;
        double* alpha = tape.alpha.data() + static_cast<std::size_t>(m - 1) * n_p;
        const std::uint64_t ctr = 2 * static_cast<std::uint64_t>(m);

        for (long long n = 0; n < n_p; ++n) {
            const double xn = x_old[n] + dt * v_old[n];
            x_new[n] = xn;
            const double a = cell_alpha[static_cast<std::size_t>(sigma.cell_index(xn))];
            alpha[n] = a;
            const StreamKey key{seed, streams::make(streams::rte_path, static_cast<std::uint64_t>(n)),
                                ctr};
            if (uniform01(key) >= a) {
                v_new[n] = config.v_lo + omega * uniform01(key.at(ctr + 1));
                flag[n] = 1;
            } else {
                v_new[n] = v_old[n];
                flag[n] = 0;
            }
        }
    }
    return tape;
}

double objective_final(const ParticleTrajectoryTape& tape,
                       const std::function<double(double, double)>& r) {
    const long long n_p = tape.n_particles;
    const double* x = tape.x.data() + static_cast<std::size_t>(tape.steps) * n_p;
    const double* v = tape.v.data() + static_cast<std::size_t>(tape.steps) * n_p;
    double sum = 0;
    for (long long n = 0; n < n_p; ++n) sum += r(x[n], v[n]);
    return tape.config.rho * sum / static_cast<double>(n_p);
}

namespace {

constexpr std::uint32_t kTapeMagic = 0x52544531;  // "RTE1"
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

void save_tape(const ParticleTrajectoryTape& tape, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_tape: cannot open " + path);
    put(out, kTapeMagic);
    put(out, kTapeVersion);
    put(out, tape.n_particles);
    put(out, tape.steps);
    put(out, tape.dt);
    put(out, tape.config.x_lo);
    put(out, tape.config.x_hi);
    put(out, tape.config.v_lo);
    put(out, tape.config.v_hi);
    put(out, tape.config.t_final);
    put(out, tape.config.rho);
    put(out, tape.seed);
    auto write_vec = [&out](const auto& v) {
        const std::uint64_t n = v.size();
        put(out, n);
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(n * sizeof(v[0])));
    };
    write_vec(tape.x);
    write_vec(tape.v);
    write_vec(tape.scattered);
    write_vec(tape.alpha);
    if (!out) throw std::runtime_error("save_tape: write failed for " + path);
}

ParticleTrajectoryTape load_tape(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_tape: cannot open " + path);
    std::uint32_t magic = 0, version = 0;
    get(in, magic);
    get(in, version);
    if (magic != kTapeMagic || version != kTapeVersion)
        throw TapeError("load_tape: bad magic or unsupported version in " + path);
    ParticleTrajectoryTape tape;
    get(in, tape.n_particles);
    get(in, tape.steps);
    get(in, tape.dt);
    get(in, tape.config.x_lo);
    get(in, tape.config.x_hi);
    get(in, tape.config.v_lo);
    get(in, tape.config.v_hi);
    get(in, tape.config.t_final);
    get(in, tape.config.rho);
    get(in, tape.seed);
    tape.config.steps = tape.steps;
    tape.config.n_particles = tape.n_particles;
    auto read_vec = [&in, &path](auto& v) {
        std::uint64_t n = 0;
        get(in, n);
        v.resize(n);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(v[0])));
        if (!in) throw TapeError("load_tape: truncated file " + path);
    };
    read_vec(tape.x);
    read_vec(tape.v);
    read_vec(tape.scattered);
    read_vec(tape.alpha);
    return tape;
}

void write_final_marginals_csv(const ParticleTrajectoryTape& tape, const std::string& path,
                               int bins) {
    const long long n_p = tape.n_particles;
    const double* x = tape.x.data() + static_cast<std::size_t>(tape.steps) * n_p;
    const double* v = tape.v.data() + static_cast<std::size_t>(tape.steps) * n_p;
    const auto& c = tape.config;

    auto histogram = [&](const double* data, double lo, double hi) {
        std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
        const double w = (hi - lo) / bins;
        for (long long n = 0; n < n_p; ++n) {
            int b = static_cast<int>(std::floor((data[n] - lo) / w));
            if (b < 0 || b >= bins) continue;
            h[static_cast<std::size_t>(b)] += 1.0;
        }
        for (double& d : h) d /= static_cast<double>(n_p) * w;
        return h;
    };

    // include any drift past the nominal box in the x window
    double x_min = c.x_lo, x_max = c.x_hi;
    for (long long n = 0; n < n_p; ++n) {
        x_min = std::min(x_min, x[n]);
        x_max = std::max(x_max, x[n]);
    }
    const auto hx = histogram(x, x_min, x_max);
    const auto hv = histogram(v, c.v_lo, c.v_hi);

    CsvWriter csv(path, {"variable", "bin_center", "density"});
    const double wx = (x_max - x_min) / bins;
    const double wv = c.omega() / bins;
    for (int b = 0; b < bins; ++b)
        csv.row({"x", csv_double(x_min + (b + 0.5) * wx), csv_double(hx[static_cast<std::size_t>(b)])});
    for (int b = 0; b < bins; ++b)
        csv.row({"v", csv_double(c.v_lo + (b + 0.5) * wv), csv_double(hv[static_cast<std::size_t>(b)])});
}

}  // namespace adjmc::rte

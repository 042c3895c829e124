// SPDX-License-Identifier: Apache-2.0
#include "adjmc/mc_gradients.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "adjmc/errors.hpp"
#include "adjmc/stats.hpp"

namespace adjmc::mc {

std::string method_name(Method m) {
    switch (m) {
        case Method::score: return "score";
        case Method::pathwise: return "pathwise";
        case Method::coupled_fd: return "coupled_fd";
    }
    return "unknown";
}

Params evaluate_score(const ParamDensityModel& model, const Point& x, const Params& theta) {
    if (model.score) return model.score(x, theta);
    if (!model.log_density)
        throw CapabilityError("score_gradient: model provides neither score nor log_density");
    Params s(theta.size());
    Params t = theta;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double h = 1e-6 * (1.0 + std::abs(theta[j]));
        t[j] = theta[j] + h;
        const double up = model.log_density(x, t);
        t[j] = theta[j] - h;
        const double dn = model.log_density(x, t);
        t[j] = theta[j];
        s[j] = (up - dn) / (2.0 * h);
    }
    return s;
}

namespace {

GradientEstimate reduce_samples(const std::vector<MeanVar>& acc, long long n, Method method) {
    GradientEstimate out;
    out.method = method;
    out.n_samples = n;
    out.value.reserve(acc.size());
    out.std_err.reserve(acc.size());
    for (const auto& a : acc) {
        out.value.push_back(a.mean);
        out.std_err.push_back(a.std_err());
    }
    return out;
}

}  // namespace

GradientEstimate score_gradient(const ParamDensityModel& model, const Payoff& f,
                                const Params& theta, long long n, std::uint64_t seed) {
    if (!model.has_score_route())
        throw CapabilityError("score_gradient: model provides neither score nor log_density");
    if (!model.sampler) throw CapabilityError("score_gradient: model provides no sampler");
    std::vector<MeanVar> acc(theta.size());
    for (long long i = 0; i < n; ++i) {
        const StreamKey key{seed, streams::make(streams::toy, static_cast<std::uint64_t>(i)), 0};
        const Point x = model.sampler(theta, key);
        const Params s = evaluate_score(model, x, theta);
        const double fx = f(x);
        for (std::size_t j = 0; j < s.size(); ++j) acc[j].add(fx * s[j]);
    }
    return reduce_samples(acc, n, Method::score);
}

GradientEstimate pathwise_gradient(const ParamDensityModel& model, const PayoffGradient& grad_f,
                                   const Params& theta, long long n, std::uint64_t seed) {
    if (!model.has_pathwise_route())
        throw CapabilityError(
            "pathwise_gradient: model needs pushforward, its jacobian and a base sampler");
    const std::size_t m = theta.size();
    std::vector<MeanVar> acc(m);
    for (long long i = 0; i < n; ++i) {
        const StreamKey key{seed, streams::make(streams::toy, static_cast<std::uint64_t>(i)), 0};
        const Point y = model.base_sampler(key);
        const Point x = model.pushforward(y, theta);
        const std::vector<double> jac = model.pushforward_jacobian(y, theta);  // dim_x x m
        const Point gf = grad_f(x);
        for (std::size_t j = 0; j < m; ++j) {
            double g = 0;
            for (std::size_t d = 0; d < gf.size(); ++d) g += jac[d * m + j] * gf[d];
            acc[j].add(g);
        }
    }
    return reduce_samples(acc, n, Method::pathwise);
}

GradientEstimate coupled_fd_gradient(const RandomObjective& j_hat, const Params& theta,
                                     const FdOptions& opt, std::uint64_t seed) {
    if (!(opt.step > 0)) throw std::invalid_argument("coupled_fd_gradient: step must be positive");
    if (opt.repeats < 1) throw std::invalid_argument("coupled_fd_gradient: repeats must be >= 1");
    const std::size_t m = theta.size();
    std::vector<MeanVar> acc(m);
    for (int rep = 0; rep < opt.repeats; ++rep) {
        const std::uint64_t rep_seed = derive_seed(seed, static_cast<std::uint64_t>(rep));
        const StreamKey base_key{rep_seed, streams::make(streams::toy, 0), 0};
        Params t = theta;
        if (opt.central) {
            for (std::size_t j = 0; j < m; ++j) {
                const StreamKey key = opt.mode == FdMode::coupled
                                          ? base_key
                                          : StreamKey{rep_seed, streams::make(streams::toy, 1 + j), 0};
                t[j] = theta[j] + opt.step;
                const double up = j_hat(t, key);
                t[j] = theta[j] - opt.step;
                const double dn = j_hat(t, key);
                t[j] = theta[j];
                acc[j].add((up - dn) / (2.0 * opt.step));
            }
        } else {
            // One base evaluation shared across components: m+1 calls total.
            const double base = j_hat(theta, base_key);
            for (std::size_t j = 0; j < m; ++j) {
                const StreamKey key = opt.mode == FdMode::coupled
                                          ? base_key
                                          : StreamKey{rep_seed, streams::make(streams::toy, 1 + j), 0};
                t[j] = theta[j] + opt.step;
                const double up = j_hat(t, key);
                t[j] = theta[j];
                acc[j].add((up - base) / opt.step);
            }
        }
    }
    return reduce_samples(acc, opt.repeats, Method::coupled_fd);
}

std::vector<double> score_covariance(const ParamDensityModel& model, const Params& theta,
                                     long long n, std::uint64_t seed) {
    if (!model.has_score_route())
        throw CapabilityError("score_covariance: model provides neither score nor log_density");
    if (!model.sampler) throw CapabilityError("score_covariance: model provides no sampler");
    const std::size_t m = theta.size();
    std::vector<double> mean(m, 0.0);
    std::vector<std::vector<double>> scores;
    scores.reserve(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
        const StreamKey key{seed, streams::make(streams::toy, static_cast<std::uint64_t>(i)), 0};
        const Point x = model.sampler(theta, key);
        scores.push_back(evaluate_score(model, x, theta));
        for (std::size_t j = 0; j < m; ++j) mean[j] += scores.back()[j];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    std::vector<double> cov(m * m, 0.0);
    for (const auto& s : scores)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b) cov[a * m + b] += (s[a] - mean[a]) * (s[b] - mean[b]);
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a; b < m; ++b) {
            cov[a * m + b] /= denom;
            cov[b * m + a] = cov[a * m + b];
        }
    return cov;
}

double score_consistency_error(const ParamDensityModel& model, const Params& theta,
                               int n_probes, std::uint64_t seed) {
    if (!model.score || !model.log_density) return 0.0;
    double worst = 0.0;
    ParamDensityModel numeric = model;
    numeric.score = nullptr;
    for (int i = 0; i < n_probes; ++i) {
        const StreamKey key{seed, streams::make(streams::toy, 0x100000ULL + i), 0};
        const Point x = model.sampler(theta, key);
        const Params sa = model.score(x, theta);
        const Params sn = evaluate_score(numeric, x, theta);
        for (std::size_t j = 0; j < sa.size(); ++j) {
            const double scale = std::max(1.0, std::abs(sa[j]));
            worst = std::max(worst, std::abs(sa[j] - sn[j]) / scale);
        }
    }
    return worst;
}

double pushforward_consistency_ks(const ParamDensityModel& model, const Params& theta,
                                  long long n, std::uint64_t seed) {
    if (!model.sampler || !model.pushforward || !model.base_sampler)
        throw CapabilityError("pushforward_consistency_ks: needs sampler, pushforward and base");
    std::vector<double> direct, mapped;
    direct.reserve(static_cast<std::size_t>(n));
    mapped.reserve(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
        const StreamKey ka{seed, streams::make(streams::toy, static_cast<std::uint64_t>(i)), 0};
        const StreamKey kb{derive_seed(seed, 1),
                           streams::make(streams::toy, static_cast<std::uint64_t>(i)), 0};
        direct.push_back(model.sampler(theta, ka)[0]);
        mapped.push_back(model.pushforward(model.base_sampler(kb), theta)[0]);
    }
    std::sort(direct.begin(), direct.end());
    std::sort(mapped.begin(), mapped.end());
    // two-sample KS over the merged order
    double d = 0;
    std::size_t ia = 0, ib = 0;
    const double na = static_cast<double>(direct.size()), nb = static_cast<double>(mapped.size());
    while (ia < direct.size() && ib < mapped.size()) {
        if (direct[ia] <= mapped[ib])
            ++ia;
        else
            ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return d;
}

ParamDensityModel gaussian_mean_model() {
    ParamDensityModel m;
    m.dim_x = 1;
    m.dim_theta = 1;
    m.log_density = [](const Point& x, const Params& th) {
        const double d = x[0] - th[0];
        return -0.5 * d * d - 0.5 * std::log(2.0 * M_PI);
    };
    m.score = [](const Point& x, const Params& th) { return Params{x[0] - th[0]}; };
    m.base_sampler = [](StreamKey key) { return Point{standard_normal(key)}; };
    m.pushforward = [](const Point& y, const Params& th) { return Point{y[0] + th[0]}; };
    m.pushforward_jacobian = [](const Point&, const Params&) { return std::vector<double>{1.0}; };
    m.sampler = [](const Params& th, StreamKey key) { return Point{th[0] + standard_normal(key)}; };
    return m;
}

ParamDensityModel gaussian_affine_model(double shift) {
    ParamDensityModel m;
    m.dim_x = 1;
    m.dim_theta = 1;
    m.log_density = [shift](const Point& x, const Params& th) {
        const double d = x[0] - shift;
        return -0.5 * d * d / (th[0] * th[0]) - std::log(std::abs(th[0])) -
               0.5 * std::log(2.0 * M_PI);
    };
    m.score = [shift](const Point& x, const Params& th) {
        const double d = x[0] - shift;
        return Params{(d * d - th[0] * th[0]) / (th[0] * th[0] * th[0])};
    };
    m.base_sampler = [](StreamKey key) { return Point{standard_normal(key)}; };
    m.pushforward = [shift](const Point& y, const Params& th) { return Point{th[0] * y[0] + shift}; };
    m.pushforward_jacobian = [](const Point& y, const Params&) { return std::vector<double>{y[0]}; };
    m.sampler = [shift](const Params& th, StreamKey key) {
        return Point{th[0] * standard_normal(key) + shift};
    };
    return m;
}

}  // namespace adjmc::mc

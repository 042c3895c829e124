// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adjmc/rng.hpp"

namespace adjmc::mc {

enum class Method { score, pathwise, coupled_fd };

std::string method_name(Method m);

/// A gradient vector with per-component standard error; the common currency
/// of every estimator in this library.
struct GradientEstimate {
    std::vector<double> value;
    std::vector<double> std_err;
    long long n_samples{0};
    Method method{Method::score};
};

using Point = std::vector<double>;  // x in R^dim_x
using Params = std::vector<double>;  // theta in R^dim_theta

/// A parametric sampling model. Only `sampler` is mandatory; estimators
/// check for the capabilities they need and throw CapabilityError otherwise.
///
/// Conventions:
///  - score(x, theta) returns d(log p)/d(theta), length dim_theta.
///  - pushforward_jacobian(y, theta) returns dT/dtheta row-major,
///    dim_x rows by dim_theta columns.
struct ParamDensityModel {
    int dim_x{1};
    int dim_theta{1};
    std::function<double(const Point&, const Params&)> log_density;
    std::function<Params(const Point&, const Params&)> score;
    std::function<Point(const Params&, StreamKey)> sampler;
    std::function<Point(const Point&, const Params&)> pushforward;
    std::function<std::vector<double>(const Point&, const Params&)> pushforward_jacobian;
    std::function<Point(StreamKey)> base_sampler;

    bool has_score_route() const { return static_cast<bool>(score) || static_cast<bool>(log_density); }
    bool has_pathwise_route() const {
        return pushforward && pushforward_jacobian && base_sampler;
    }
};

using Payoff = std::function<double(const Point&)>;
using PayoffGradient = std::function<Point(const Point&)>;

/// Score of the model at (x, theta): analytic if provided, otherwise central
/// finite differences of log_density with step 1e-6 * (1 + |theta_j|).
Params evaluate_score(const ParamDensityModel& model, const Point& x, const Params& theta);

/// (1/N) sum f(X_i) * score(X_i, theta) with X_i ~ p(., theta).
GradientEstimate score_gradient(const ParamDensityModel& model, const Payoff& f,
                                const Params& theta, long long n, std::uint64_t seed);

/// (1/N) sum dT/dtheta(Y_i)^T grad_f(T(Y_i, theta)) with Y_i from the base.
GradientEstimate pathwise_gradient(const ParamDensityModel& model, const PayoffGradient& grad_f,
                                   const Params& theta, long long n, std::uint64_t seed);

enum class FdMode { coupled, independent };

struct FdOptions {
    double step{1e-2};
    FdMode mode{FdMode::coupled};
    bool central{false};  // one-sided by default; central halves the bias at double cost
    int repeats{1};       // std_err is estimated across repeats
};

using RandomObjective = std::function<double(const Params&, StreamKey)>;

/// Per-component finite differences of a randomized objective. In coupled
/// mode the base and perturbed evaluations receive the identical key
/// (common random numbers); in independent mode each perturbed evaluation
/// gets a fresh key. One-sided differences cost dim_theta + 1 evaluations
/// per repeat.
GradientEstimate coupled_fd_gradient(const RandomObjective& j_hat, const Params& theta,
                                     const FdOptions& opt, std::uint64_t seed);

/// Empirical covariance of the score at theta (the Fisher information
/// estimate), row-major dim_theta x dim_theta, symmetric PSD.
std::vector<double> score_covariance(const ParamDensityModel& model, const Params& theta,
                                     long long n, std::uint64_t seed);

/// Cross-check that an analytic score matches finite differences of
/// log_density on random probe points. Returns the worst relative error.
double score_consistency_error(const ParamDensityModel& model, const Params& theta,
                               int n_probes, std::uint64_t seed);

/// Two-sample Kolmogorov-Smirnov statistic (first coordinate) between
/// direct sampler draws and pushforward-of-base draws; near zero when the
/// two sampling routes agree in distribution.
double pushforward_consistency_ks(const ParamDensityModel& model, const Params& theta,
                                  long long n, std::uint64_t seed);

// Toy distributions used by the verification suite and the mc-demo runner.

/// Unit-variance Gaussian with mean theta[0]; full score/pathwise structure.
ParamDensityModel gaussian_mean_model();

/// Gaussian with fixed mean `shift` and standard deviation theta[0],
/// realized as the affine pushforward T(y, theta) = theta * y + shift of a
/// standard normal base.
ParamDensityModel gaussian_affine_model(double shift);

}  // namespace adjmc::mc

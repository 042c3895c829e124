// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "adjmc/vec3.hpp"

namespace adjmc {

/// Address of a single random draw. A draw is a pure function of the key, so
/// any worker can evaluate any draw in any order and two runs that share key
/// material consume identical underlying uniforms (the mechanism behind
/// common-random-number coupling and adjoint replay).
struct StreamKey {
    std::uint64_t experiment_seed{0};
    std::uint64_t stream_id{0};
    std::uint64_t counter{0};

    constexpr StreamKey at(std::uint64_t c) const { return {experiment_seed, stream_id, c}; }
};

namespace detail {

// splitmix64 finalizer; full avalanche on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t key_bits(const StreamKey& k) {
    std::uint64_t h = mix64(k.experiment_seed + 0x9e3779b97f4a7c15ULL);
    h = mix64((h ^ k.stream_id) + 0xbf58476d1ce4e5b9ULL);
    h = mix64((h ^ k.counter) + 0x94d049bb133111ebULL);
    return h;
}

}  // namespace detail

/// Uniform draw in [0, 1), 53 significant bits.
inline double uniform01(const StreamKey& key) {
    return static_cast<double>(detail::key_bits(key) >> 11) * 0x1.0p-53;
}

/// Uniform unit vector on S^2 via inverse CDF on the polar cosine plus a
/// uniform azimuth. Consumes counters key.counter and key.counter+1; the
/// draw count never depends on inputs, so replay stays aligned.
inline Vec3 sample_unit_sphere(const StreamKey& key) {
    const double cos_t = 1.0 - 2.0 * uniform01(key);
    const double sin_t = std::sqrt((1.0 - cos_t) * (1.0 + cos_t));
    const double phi = 2.0 * M_PI * uniform01(key.at(key.counter + 1));
    return {sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t};
}

/// One standard normal from two uniforms (Box-Muller, cosine branch).
inline double standard_normal(const StreamKey& key) {
    const double u1 = uniform01(key);
    const double u2 = uniform01(key.at(key.counter + 1));
    const double r = std::sqrt(-2.0 * std::log1p(-u1));  // 1-u1 in (0,1]
    return r * std::cos(2.0 * M_PI * u2);
}

/// Three i.i.d. standard normals. Consumes counters key.counter .. +3.
inline Vec3 sample_standard_normal3(const StreamKey& key) {
    const double u1 = uniform01(key);
    const double u2 = uniform01(key.at(key.counter + 1));
    const double u3 = uniform01(key.at(key.counter + 2));
    const double u4 = uniform01(key.at(key.counter + 3));
    const double r1 = std::sqrt(-2.0 * std::log1p(-u1));
    const double r2 = std::sqrt(-2.0 * std::log1p(-u3));
    const double a1 = 2.0 * M_PI * u2;
    return {r1 * std::cos(a1), r1 * std::sin(a1), r2 * std::cos(2.0 * M_PI * u4)};
}

/// Stream-id namespace. The top byte tags the purpose, the rest indexes
/// within it (particle id, pair block, ...). Distinct tags never collide.
namespace streams {

inline constexpr std::uint64_t make(std::uint64_t tag, std::uint64_t index) {
    return (tag << 56) | index;
}

inline constexpr std::uint64_t rte_init = 1;      // index = particle
inline constexpr std::uint64_t rte_path = 2;      // index = particle
inline constexpr std::uint64_t dsmc_init = 3;     // index = particle
inline constexpr std::uint64_t dsmc_shuffle = 4;  // index = 0
inline constexpr std::uint64_t dsmc_pair = 5;     // index = 0
inline constexpr std::uint64_t toy = 6;      // index = sample
inline constexpr std::uint64_t harness = 7;  // index = purpose

}  // namespace streams

/// Independent child seed (per repeat, per perturbed evaluation, ...).
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return detail::mix64(detail::mix64(seed + 0x9e3779b97f4a7c15ULL) ^ (index + 1));
}

/// Collapse a key to entropy for a nested run: black-box evaluators that
/// internally derive their own streams treat the incoming key as a seed.
inline constexpr std::uint64_t seed_from(const StreamKey& key) {
    return detail::key_bits(key);
}

}  // namespace adjmc

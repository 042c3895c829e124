// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace adjmc {

/// Invalid run configuration (CFL violation, dt*mu > 1, bad domain, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A model is missing the structure an estimator requires (no score, no
/// pushforward, ...).
struct CapabilityError : std::runtime_error {
    explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

/// A recorded tape is internally inconsistent and cannot be replayed.
struct TapeError : std::runtime_error {
    explicit TapeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace adjmc

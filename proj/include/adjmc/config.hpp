// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace adjmc {

/// Flat sectioned key-value text ([section] lines, key = value entries,
/// '#' comments). Keys flatten to "section.key". Typed getters record every
/// resolved value, defaults included, so runs can echo their full
/// configuration.
class ConfigMap {
  public:
    ConfigMap() = default;

    static ConfigMap from_file(const std::string& path);
    static ConfigMap from_text(const std::string& text);

    void set(const std::string& key, const std::string& value) { raw_[key] = value; }
    bool has(const std::string& key) const { return raw_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Every key resolved through a getter, in sorted order.
    std::vector<std::pair<std::string, std::string>> resolved() const;

  private:
    std::map<std::string, std::string> raw_;
    mutable std::map<std::string, std::string> resolved_;
};

/// Fully-typed experiment description shared by the CLI and the harness.
struct ExperimentConfig {
    std::string kind{"validate"};
    std::uint64_t seed{12345};
    int repeats{16};
    std::string output_dir{"out"};

    struct Rte {
        long long n_particles{1000000};
        int steps{50};
        double t_final{0.5};
        double x_lo{-2}, x_hi{2};
        double v_lo{-1}, v_hi{1};
        int sigma_cells{80};
        int v_bins{20};
        // scattering field sigma(x) = base + bump * exp(-decay x^2)
        double sigma_base{2.0}, sigma_bump{2.0}, sigma_decay{4.0};
        // initial spatial profile: two unit Gaussians at +/-offset
        double f0_offset{0.5}, f0_width{0.35355339059327373};
        std::string method{"all"};  // p-otd | p-dto | fvm | all
        int marginal_bins{80};
    } rte;

    struct FvmRef {
        int nx{800}, nv{40};
        int steps{500};
    } fvm;

    struct Dsmc {
        long long n_particles{100000};
        int steps{20};
        double dt{0.1};
        std::string kernel{"maxwellian"};  // maxwellian | vhs
        double vhs_c{1.0 / (4.0 * M_PI)};
        double vhs_beta{0.5};
        double tx{0.5}, ty{1.0}, tz{1.0};
        std::string method{"both"};  // adjoint | fd | both
    } dsmc;

    struct Fd {
        double step{0.01};
        bool central{false};
    } fd;

    struct Scaling {
        std::string target{"rte"};  // rte | dsmc
        int n_lo_log2{11}, n_hi_log2{17};
        int repeats{32};
    } scaling;

    long long mc_demo_samples{100000};

    static ExperimentConfig from_map(const ConfigMap& map);
    /// Every setting as section.key = value, for the run manifest.
    std::vector<std::pair<std::string, std::string>> manifest_entries() const;
    void validate() const;
};

}  // namespace adjmc

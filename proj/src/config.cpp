// SPDX-License-Identifier: Apache-2.0
#include "adjmc/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "adjmc/csv.hpp"
#include "adjmc/errors.hpp"

namespace adjmc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

ConfigMap ConfigMap::from_text(const std::string& text) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        cfg.raw_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = raw_.find(key);
    const std::string v = it == raw_.end() ? fallback : it->second;
    resolved_[key] = v;
    return v;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    const auto it = raw_.find(key);
    if (it == raw_.end()) {
        resolved_[key] = csv_double(fallback);
        return fallback;
    }
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        resolved_[key] = csv_double(v);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config field " + key + ": '" + it->second + "' is not a number");
    }
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
    const auto it = raw_.find(key);
    if (it == raw_.end()) {
        resolved_[key] = std::to_string(fallback);
        return fallback;
    }
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        resolved_[key] = std::to_string(v);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config field " + key + ": '" + it->second + "' is not an integer");
    }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    const auto it = raw_.find(key);
    if (it == raw_.end()) {
        resolved_[key] = fallback ? "true" : "false";
        return fallback;
    }
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        resolved_[key] = "true";
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        resolved_[key] = "false";
        return false;
    }
    throw ConfigError("config field " + key + ": '" + it->second + "' is not a boolean");
}

std::vector<std::pair<std::string, std::string>> ConfigMap::resolved() const {
    return {resolved_.begin(), resolved_.end()};
}

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
    ExperimentConfig c;
    c.kind = map.get_string("run.kind", c.kind);
    c.seed = static_cast<std::uint64_t>(map.get_int("run.seed", static_cast<long long>(c.seed)));
    c.repeats = static_cast<int>(map.get_int("run.repeats", c.repeats));
    c.output_dir = map.get_string("run.output_dir", c.output_dir);

    c.rte.n_particles = map.get_int("rte.n_particles", c.rte.n_particles);
    c.rte.steps = static_cast<int>(map.get_int("rte.steps", c.rte.steps));
    c.rte.t_final = map.get_double("rte.t_final", c.rte.t_final);
    c.rte.x_lo = map.get_double("rte.x_lo", c.rte.x_lo);
    c.rte.x_hi = map.get_double("rte.x_hi", c.rte.x_hi);
    c.rte.v_lo = map.get_double("rte.v_lo", c.rte.v_lo);
    c.rte.v_hi = map.get_double("rte.v_hi", c.rte.v_hi);
    c.rte.sigma_cells = static_cast<int>(map.get_int("rte.sigma_cells", c.rte.sigma_cells));
    c.rte.v_bins = static_cast<int>(map.get_int("rte.v_bins", c.rte.v_bins));
    c.rte.sigma_base = map.get_double("rte.sigma_base", c.rte.sigma_base);
    c.rte.sigma_bump = map.get_double("rte.sigma_bump", c.rte.sigma_bump);
    c.rte.sigma_decay = map.get_double("rte.sigma_decay", c.rte.sigma_decay);
    c.rte.f0_offset = map.get_double("rte.f0_offset", c.rte.f0_offset);
    c.rte.f0_width = map.get_double("rte.f0_width", c.rte.f0_width);
    c.rte.method = map.get_string("rte.method", c.rte.method);
    c.rte.marginal_bins = static_cast<int>(map.get_int("rte.marginal_bins", c.rte.marginal_bins));

    c.fvm.nx = static_cast<int>(map.get_int("fvm.nx", c.fvm.nx));
    c.fvm.nv = static_cast<int>(map.get_int("fvm.nv", c.fvm.nv));
    c.fvm.steps = static_cast<int>(map.get_int("fvm.steps", c.fvm.steps));

    c.dsmc.n_particles = map.get_int("dsmc.n_particles", c.dsmc.n_particles);
    c.dsmc.steps = static_cast<int>(map.get_int("dsmc.steps", c.dsmc.steps));
    c.dsmc.dt = map.get_double("dsmc.dt", c.dsmc.dt);
    c.dsmc.kernel = map.get_string("dsmc.kernel", c.dsmc.kernel);
    c.dsmc.vhs_c = map.get_double("dsmc.vhs_c", c.dsmc.vhs_c);
    c.dsmc.vhs_beta = map.get_double("dsmc.vhs_beta", c.dsmc.vhs_beta);
    c.dsmc.tx = map.get_double("dsmc.tx", c.dsmc.tx);
    c.dsmc.ty = map.get_double("dsmc.ty", c.dsmc.ty);
    c.dsmc.tz = map.get_double("dsmc.tz", c.dsmc.tz);
    c.dsmc.method = map.get_string("dsmc.method", c.dsmc.method);

    c.fd.step = map.get_double("fd.step", c.fd.step);
    c.fd.central = map.get_bool("fd.central", c.fd.central);

    c.scaling.target = map.get_string("scaling.target", c.scaling.target);
    c.scaling.n_lo_log2 = static_cast<int>(map.get_int("scaling.n_lo_log2", c.scaling.n_lo_log2));
    c.scaling.n_hi_log2 = static_cast<int>(map.get_int("scaling.n_hi_log2", c.scaling.n_hi_log2));
    c.scaling.repeats = static_cast<int>(map.get_int("scaling.repeats", c.scaling.repeats));

    c.mc_demo_samples = map.get_int("mc_demo.samples", c.mc_demo_samples);
    c.validate();
    return c;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::manifest_entries() const {
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("run.kind", kind);
    e.emplace_back("run.seed", std::to_string(seed));
    e.emplace_back("run.repeats", std::to_string(repeats));
    e.emplace_back("run.output_dir", output_dir);
    e.emplace_back("rte.n_particles", std::to_string(rte.n_particles));
    e.emplace_back("rte.steps", std::to_string(rte.steps));
    e.emplace_back("rte.t_final", csv_double(rte.t_final));
    e.emplace_back("rte.x_lo", csv_double(rte.x_lo));
    e.emplace_back("rte.x_hi", csv_double(rte.x_hi));
    e.emplace_back("rte.v_lo", csv_double(rte.v_lo));
    e.emplace_back("rte.v_hi", csv_double(rte.v_hi));
    e.emplace_back("rte.sigma_cells", std::to_string(rte.sigma_cells));
    e.emplace_back("rte.v_bins", std::to_string(rte.v_bins));
    e.emplace_back("rte.sigma_base", csv_double(rte.sigma_base));
    e.emplace_back("rte.sigma_bump", csv_double(rte.sigma_bump));
    e.emplace_back("rte.sigma_decay", csv_double(rte.sigma_decay));
    e.emplace_back("rte.f0_offset", csv_double(rte.f0_offset));
    e.emplace_back("rte.f0_width", csv_double(rte.f0_width));
    e.emplace_back("rte.method", rte.method);
    e.emplace_back("rte.marginal_bins", std::to_string(rte.marginal_bins));
    e.emplace_back("fvm.nx", std::to_string(fvm.nx));
    e.emplace_back("fvm.nv", std::to_string(fvm.nv));
    e.emplace_back("fvm.steps", std::to_string(fvm.steps));
    e.emplace_back("dsmc.n_particles", std::to_string(dsmc.n_particles));
    e.emplace_back("dsmc.steps", std::to_string(dsmc.steps));
    e.emplace_back("dsmc.dt", csv_double(dsmc.dt));
    e.emplace_back("dsmc.kernel", dsmc.kernel);
    e.emplace_back("dsmc.vhs_c", csv_double(dsmc.vhs_c));
    e.emplace_back("dsmc.vhs_beta", csv_double(dsmc.vhs_beta));
    e.emplace_back("dsmc.tx", csv_double(dsmc.tx));
    e.emplace_back("dsmc.ty", csv_double(dsmc.ty));
    e.emplace_back("dsmc.tz", csv_double(dsmc.tz));
    e.emplace_back("dsmc.method", dsmc.method);
    e.emplace_back("fd.step", csv_double(fd.step));
    e.emplace_back("fd.central", fd.central ? "true" : "false");
    e.emplace_back("scaling.target", scaling.target);
    e.emplace_back("scaling.n_lo_log2", std::to_string(scaling.n_lo_log2));
    e.emplace_back("scaling.n_hi_log2", std::to_string(scaling.n_hi_log2));
    e.emplace_back("scaling.repeats", std::to_string(scaling.repeats));
    e.emplace_back("mc_demo.samples", std::to_string(mc_demo_samples));
    return e;
}

void ExperimentConfig::validate() const {
    static const char* kinds[] = {"mc_demo",       "rte_forward",  "rte_gradient", "rte_scaling",
                                  "dsmc_forward",  "dsmc_gradient", "dsmc_scaling", "validate"};
    bool known = false;
    for (const char* k : kinds) known = known || kind == k;
    if (!known) throw ConfigError("config field run.kind: unknown experiment '" + kind + "'");
    if (repeats < 1) throw ConfigError("config field run.repeats: must be >= 1");
    if (rte.n_particles < 1) throw ConfigError("config field rte.n_particles: must be >= 1");
    if (rte.steps < 0) throw ConfigError("config field rte.steps: must be >= 0");
    if (rte.sigma_cells < 1) throw ConfigError("config field rte.sigma_cells: must be >= 1");
    if (rte.v_bins < 1) throw ConfigError("config field rte.v_bins: must be >= 1");
    if (!(rte.method == "p-otd" || rte.method == "p-dto" || rte.method == "fvm" ||
          rte.method == "all"))
        throw ConfigError("config field rte.method: expected p-otd | p-dto | fvm | all");
    if (dsmc.n_particles < 2 || dsmc.n_particles % 2 != 0)
        throw ConfigError("config field dsmc.n_particles: must be even and >= 2");
    if (dsmc.steps < 0) throw ConfigError("config field dsmc.steps: must be >= 0");
    if (!(dsmc.dt > 0)) throw ConfigError("config field dsmc.dt: must be positive");
    if (!(dsmc.kernel == "maxwellian" || dsmc.kernel == "vhs"))
        throw ConfigError("config field dsmc.kernel: expected maxwellian | vhs");
    if (!(dsmc.method == "adjoint" || dsmc.method == "fd" || dsmc.method == "both"))
        throw ConfigError("config field dsmc.method: expected adjoint | fd | both");
    if (!(dsmc.tx > 0 && dsmc.ty > 0 && dsmc.tz > 0))
        throw ConfigError("config field dsmc.tx/ty/tz: temperatures must be positive");
    if (!(fd.step > 0)) throw ConfigError("config field fd.step: must be positive");
    if (!(scaling.target == "rte" || scaling.target == "dsmc"))
        throw ConfigError("config field scaling.target: expected rte | dsmc");
    if (scaling.n_hi_log2 < scaling.n_lo_log2)
        throw ConfigError("config field scaling.n_hi_log2: must be >= scaling.n_lo_log2");
    if (scaling.repeats < 2) throw ConfigError("config field scaling.repeats: must be >= 2");
    if (mc_demo_samples < 2) throw ConfigError("config field mc_demo.samples: must be >= 2");
}

}  // namespace adjmc

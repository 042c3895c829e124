// SPDX-License-Identifier: Apache-2.0
//
// adjmc command line front end. Subcommands map onto experiment kinds; any
// flag overrides the matching config-file key, and every resolved setting is
// echoed into the run manifest.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adjmc/config.hpp"
#include "adjmc/experiments.hpp"

namespace {

struct CommonArgs {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_override(CommonArgs& args, const std::string& key, const std::string& value) {
    args.overrides.emplace_back(key, value);
}

adjmc::ExperimentConfig build_config(const CommonArgs& args, const std::string& kind) {
    adjmc::ConfigMap map;
    if (!args.config_file.empty()) map = adjmc::ConfigMap::from_file(args.config_file);
    for (const auto& [k, v] : args.overrides) map.set(k, v);
    map.set("run.kind", kind);
    if (!map.has("run.output_dir")) {
        if (const char* env = std::getenv("ADJMC_OUTPUT_DIR")) map.set("run.output_dir", env);
    }
    return adjmc::ExperimentConfig::from_map(map);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo gradient estimators and adjoint particle solvers for kinetic transport"};
    app.require_subcommand(1);

    CommonArgs args;

    // shared flag plumbing: each flag writes through to a config key
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_file,
                        "configuration file (sectioned key = value text)");
        sub->add_option_function<std::string>(
            "--seed", [&](const std::string& v) { add_override(args, "run.seed", v); },
            "experiment seed");
        sub->add_option_function<std::string>(
            "--repeats", [&](const std::string& v) { add_override(args, "run.repeats", v); },
            "independent repeats");
        sub->add_option_function<std::string>(
            "--out", [&](const std::string& v) { add_override(args, "run.output_dir", v); },
            "output directory (also ADJMC_OUTPUT_DIR)");
    };

    auto* mc_demo = app.add_subcommand("mc-demo", "toy-suite gradient estimators, CSV output");
    add_common(mc_demo);
    mc_demo->add_option_function<std::string>(
        "--samples", [&](const std::string& v) { add_override(args, "mc_demo.samples", v); },
        "samples per estimator");

    auto* rte_forward = app.add_subcommand("rte-forward", "forward transport run; saves tape and marginals");
    auto* rte_grad = app.add_subcommand("rte-grad", "scattering-field gradient via particle and FVM routes");
    for (CLI::App* sub : {rte_forward, rte_grad}) {
        add_common(sub);
        sub->add_option_function<std::string>(
            "--n", [&](const std::string& v) { add_override(args, "rte.n_particles", v); },
            "particle count");
        sub->add_option_function<std::string>(
            "--steps", [&](const std::string& v) { add_override(args, "rte.steps", v); },
            "time steps");
    }
    rte_grad->add_option_function<std::string>(
        "--method", [&](const std::string& v) { add_override(args, "rte.method", v); },
        "p-otd | p-dto | fvm | all");

    auto* dsmc_forward = app.add_subcommand("dsmc-forward", "forward collision run; saves tape and moments");
    auto* dsmc_grad = app.add_subcommand("dsmc-grad", "initial-condition gradient: adjoint sweep and coupled FD");
    for (CLI::App* sub : {dsmc_forward, dsmc_grad}) {
        add_common(sub);
        sub->add_option_function<std::string>(
            "--n", [&](const std::string& v) { add_override(args, "dsmc.n_particles", v); },
            "particle count (even)");
        sub->add_option_function<std::string>(
            "--steps", [&](const std::string& v) { add_override(args, "dsmc.steps", v); },
            "time steps");
        sub->add_option_function<std::string>(
            "--kernel", [&](const std::string& v) { add_override(args, "dsmc.kernel", v); },
            "maxwellian | vhs");
    }
    dsmc_grad->add_option_function<std::string>(
        "--method", [&](const std::string& v) { add_override(args, "dsmc.method", v); },
        "adjoint | fd | both");

    auto* scaling = app.add_subcommand("scaling", "error std dev against particle count");
    add_common(scaling);
    scaling->add_option_function<std::string>(
        "--target", [&](const std::string& v) { add_override(args, "scaling.target", v); },
        "rte | dsmc");

    auto* validate = app.add_subcommand("validate", "run the invariant battery; exit 0 iff all pass");
    add_common(validate);

    CLI11_PARSE(app, argc, argv);

    std::string kind;
    if (mc_demo->parsed()) kind = "mc_demo";
    if (rte_forward->parsed()) kind = "rte_forward";
    if (rte_grad->parsed()) kind = "rte_gradient";
    if (dsmc_forward->parsed()) kind = "dsmc_forward";
    if (dsmc_grad->parsed()) kind = "dsmc_gradient";
    if (validate->parsed()) kind = "validate";
    if (scaling->parsed()) {
        adjmc::ConfigMap merged;
        if (!args.config_file.empty()) merged = adjmc::ConfigMap::from_file(args.config_file);
        for (const auto& [k, v] : args.overrides) merged.set(k, v);
        kind = merged.get_string("scaling.target", "rte") == "dsmc" ? "dsmc_scaling" : "rte_scaling";
    }

    try {
        const auto config = build_config(args, kind);
        return adjmc::harness::run_experiment(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "brwre/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Event-driven Monte Carlo lab for branching random walk in random environment"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    int workers = 0;
    bool serial = false;
    app.add_option("--config", config_path, "experiment config JSON (built-in preset if omitted)");
    app.add_option("--set", overrides, "override a config key, e.g. --set sim.T=6")
        ->take_all();
    app.add_option("--workers", workers, "OpenMP worker count (0 = runtime default)");
    app.add_flag("--serial", serial, "run replica loops on the serial reference path");

    auto* sub_simulate = app.add_subcommand("simulate", "write one trajectory record per replica");
    auto* sub_means = app.add_subcommand("estimate-means", "estimate the mean of the maximum on the grid");
    auto* sub_tail = app.add_subcommand("sigma-tail", "estimate the hitting-time survival curve and tail rate");
    auto* sub_select = app.add_subcommand("select", "build subsequence selections from cached means");
    auto* sub_tight = app.add_subcommand("tightness", "centered-quantile diagnostics along the cached selection");
    auto* sub_pipeline = app.add_subcommand("pipeline", "full chain: means, tail, selection, tightness, summary");
    auto* sub_verify = app.add_subcommand("verify", "run one named distributional check");
    std::string check;
    sub_verify->add_option("check", check, "one of: c_formula geometric_pop dh_identity monotone_mean sigma_tail main_inequality first_jump_split counting_inequality decomposition")
        ->required();

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#endif

    brwre::ExperimentConfig cfg;
    try {
        cfg = brwre::load_config(config_path, overrides);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return brwre::kExitConfigError;
    }
    if (serial) cfg.policy = brwre::ExecutionPolicy::Serial;

    try {
        if (sub_simulate->parsed()) return brwre::cmd_simulate(cfg);
        if (sub_means->parsed()) return brwre::cmd_estimate_means(cfg);
        if (sub_tail->parsed()) return brwre::cmd_sigma_tail(cfg);
        if (sub_select->parsed()) return brwre::cmd_select(cfg);
        if (sub_tight->parsed()) return brwre::cmd_tightness(cfg);
        if (sub_pipeline->parsed()) return brwre::cmd_pipeline(cfg);
        if (sub_verify->parsed()) return brwre::cmd_verify(cfg, check);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return brwre::kExitRuntimeError;
    }
    return brwre::kExitConfigError;
}

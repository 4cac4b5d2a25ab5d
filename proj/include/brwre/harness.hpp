#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "brwre/diagnose.hpp"
#include "brwre/select.hpp"
#include "brwre/stats.hpp"

namespace brwre {

// exit codes shared by every subcommand
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

struct ReplicaBudget {
    std::uint64_t simulate = 1000;
    std::uint64_t estimate = 5000;
    std::uint64_t tail = 10000;
    std::uint64_t diagnose = 2000;
    std::uint64_t verify = 10000;
};

struct ExperimentConfig {
    EnvironmentSpec environment;  // seed is taken from env_seed
    SimConfig sim;
    ReplicaBudget replicas;
    double delta = 0.5;
    std::uint64_t env_seed = 9001;
    std::uint64_t estimate_seed = 9002;
    std::uint64_t diagnose_seed = 9003;
    EnvMode mode = EnvMode::Quenched;
    double tightness_multiplier = 1.25;
    int sigma_y = 1;
    double z_max = 6.0;
    std::string output_dir = "out";
    ExecutionPolicy policy = ExecutionPolicy::OpenMP;

    void validate() const;
    EnvSampler sampler() const;
    std::string to_json_string() const;

    static ExperimentConfig paper_regime();
};

// Reads the config file (built-in paper regime when path is empty), applies
// `--set key=value` overrides with dotted paths, then the BRWRE_OUT_DIR
// fallback for the output directory.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

int cmd_simulate(const ExperimentConfig& cfg);
int cmd_estimate_means(const ExperimentConfig& cfg);
int cmd_sigma_tail(const ExperimentConfig& cfg);
int cmd_select(const ExperimentConfig& cfg);
int cmd_tightness(const ExperimentConfig& cfg);
int cmd_pipeline(const ExperimentConfig& cfg);
int cmd_verify(const ExperimentConfig& cfg, const std::string& check);

std::vector<std::string> verify_check_names();

// small file helpers shared by the CLI and the test suites
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Selection artifacts round-trip through JSON for the staged CLI.
SelectionResult selection_from_json(const std::string& text, const std::vector<double>& grid);

}  // namespace brwre

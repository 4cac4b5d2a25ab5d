#pragma once
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwre/engine.hpp"
#include "brwre/environment.hpp"
#include "brwre/replicas.hpp"
#include "brwre/rng.hpp"

namespace brwre {

enum class EnvMode { Quenched, Annealed };

std::string mode_name(EnvMode m);
EnvMode mode_from_name(const std::string& name);

// Quenched mode serves one fixed realization to every replica; annealed mode
// redraws the environment per (stage, replica) from the spec's seed.
struct EnvSampler {
    EnvMode mode = EnvMode::Quenched;
    EnvironmentSpec spec;

    Environment for_replica(Stage stage, std::uint64_t replica) const;
};

struct MeanSem {
    double mean = 0.0;
    double sem = 0.0;
    std::uint64_t n = 0;
};

MeanSem mean_sem(std::span<const double> xs);

// Closed-form probability that a split happens before any move and before
// 1/L, for a single particle at a site with rate xi0:
//   (1 - e^{-(xi0+1)/L}) * xi0 / (xi0 + 1).
double closed_form_c(double xi0, int grid_l);

struct MeanSeries {
    int grid_l = 1;
    double eta = 0.0;
    std::vector<double> grid;
    std::vector<double> mean;
    std::vector<double> sem;
    EnvMode mode = EnvMode::Quenched;
    std::uint64_t replicas = 0;

    double horizon() const { return grid.empty() ? 0.0 : grid.back(); }
    std::size_t index_of(double t) const;
    std::string to_csv() const;
    static MeanSeries from_csv(const std::string& text);
};

struct EstimateOptions {
    EnvSampler env;
    SimConfig sim;
    std::uint64_t replicas = 2;
    std::uint64_t seed = 0;
    Stage stage = Stage::Estimate;
    ExecutionPolicy policy = ExecutionPolicy::OpenMP;
};

MeanSeries estimate_mean_series(const EstimateOptions& opt);

class AllCensored : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SurvivalCurve {
    std::vector<double> z;
    std::vector<double> survival;
    std::vector<std::uint64_t> at_risk;  // replicas with sigma >= z
    double c1_hat = 0.0;                 // fitted tail rate (negative fit slope)
    double c_hat = 0.0;                  // fitted prefactor exp(intercept)
    double r_squared = 0.0;
    int y = 1;
    std::uint64_t replicas = 0;

    std::string to_csv() const;
};

SurvivalCurve estimate_sigma_tail(const EnvSampler& env, int y, std::vector<double> z_grid,
                                  std::uint64_t replicas, std::uint64_t seed,
                                  ExecutionPolicy policy = ExecutionPolicy::OpenMP,
                                  std::optional<double> deadline = std::nullopt);

struct GapEstimate {
    double t = 0.0;
    double value = 0.0;
    double sem = 0.0;
    std::vector<double> abs_diff_samples;
    std::vector<double> m1_samples;
};

GapEstimate estimate_abs_gap(const EnvSampler& env, const SimConfig& base, double t,
                             std::uint64_t replicas, std::uint64_t seed,
                             ExecutionPolicy policy = ExecutionPolicy::OpenMP);

struct InequalityReport {
    double t = 0.0;
    double lhs = 0.0, lhs_sem = 0.0;
    double rhs = 0.0, rhs_sem = 0.0;
    double slack = 0.0, slack_sem = 0.0;
    double increment_term = 0.0, increment_sem = 0.0;
    double indicator_term = 0.0, indicator_sem = 0.0;
    double c_value = 0.0;
    std::uint64_t replicas = 0;

    std::string to_json_string(std::uint64_t seed) const;
};

// Two-copy gap against the rescaled mean-increment bound, all terms estimated
// on common replicas so the slack carries an honest standard error.
InequalityReport verify_main_inequality(const EnvSampler& env, const SimConfig& base, double t,
                                        std::uint64_t replicas, std::uint64_t seed,
                                        ExecutionPolicy policy = ExecutionPolicy::OpenMP);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct FirstJumpReport {
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double diff = 0.0, diff_sem = 0.0;
    double cutoff_term = 0.0, cutoff_sem = 0.0;
    double translation_gap = 0.0, translation_sem = 0.0;  // mean(M^{+1} - M^{-1})
    std::uint64_t replicas = 0;
};

// Checks that the move-branch term averages the two unit-shifted restarts, and
// that the cutoff branch contributes zero.
FirstJumpReport verify_first_jump_split(const EnvSampler& env, const SimConfig& base, double t,
                                        std::uint64_t replicas, std::uint64_t seed,
                                        ExecutionPolicy policy = ExecutionPolicy::OpenMP);

struct BranchFrequencies {
    double split_first = 0.0;
    double move_first = 0.0;
    double cutoff_first = 0.0;
    std::uint64_t replicas = 0;
};

BranchFrequencies estimate_branch_frequencies(const EnvSampler& env, const SimConfig& base,
                                              std::uint64_t replicas, std::uint64_t seed,
                                              ExecutionPolicy policy = ExecutionPolicy::OpenMP);

// Rejection sampler for the maximum at time tau + t conditioned on the
// split-first branch. Accepted attempts are consumed in attempt order, so the
// output is independent of scheduling.
std::vector<double> sample_split_first_max(const EnvSampler& env, const SimConfig& base, double t,
                                           std::uint64_t n_samples, std::uint64_t seed,
                                           ExecutionPolicy policy = ExecutionPolicy::OpenMP);

// max of two independent copies of M_t in a shared environment
std::vector<double> sample_max_of_two(const EnvSampler& env, const SimConfig& base, double t,
                                      std::uint64_t n_samples, std::uint64_t seed,
                                      ExecutionPolicy policy = ExecutionPolicy::OpenMP);

struct PopulationStats {
    std::vector<std::uint64_t> counts;
    double mean = 0.0;
    double sem = 0.0;
};

PopulationStats estimate_population(const EnvSampler& env, const SimConfig& base,
                                    std::uint64_t replicas, std::uint64_t seed,
                                    ExecutionPolicy policy = ExecutionPolicy::OpenMP);

// Chi-square goodness-of-fit p-value of observed counts on {1,2,...} against
// Geometric(p), tail-merged so every expected bin count is >= 5.
double geometric_gof_pvalue(const std::vector<std::uint64_t>& counts, double p);

// Growth-rate proxy: 1.2 * max over grid times t >= horizon/2 of mean(t)/t.
double estimate_x_star(const MeanSeries& series, double safety_factor = 1.2);

}  // namespace brwre

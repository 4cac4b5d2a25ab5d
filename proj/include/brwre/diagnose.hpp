#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "brwre/select.hpp"
#include "brwre/stats.hpp"

namespace brwre {

struct TightnessReport {
    std::vector<double> times;  // selected subsequence
    std::vector<double> q05, q25, q50, q75, q95;
    std::vector<double> spread;       // q95 - q05 per selected time
    std::vector<double> full_grid;
    std::vector<double> full_spread;  // same replicas, every grid time
    std::uint64_t replicas = 0;

    double max_spread_selected() const;
    double median_spread_selected() const;
    double max_spread_full() const;

    std::string to_csv() const;
    std::string summary_json() const;
};

// Centered-quantile spreads of fresh replicas along the selected subsequence.
// The replicas must be independent of the ones behind `series`; centering uses
// the stored series means. Quantiles are nearest-rank.
TightnessReport tightness_report(const EnvSampler& env, const SelectionResult& sel,
                                 const MeanSeries& series, std::uint64_t replicas,
                                 std::uint64_t seed,
                                 ExecutionPolicy policy = ExecutionPolicy::OpenMP,
                                 const SimConfig& base = SimConfig{});

struct DecompositionReport {
    double t = 0.0;
    int y = 1;
    std::vector<double> bin_prob;      // sigma in ((k-1)/L, k/L]
    std::vector<double> bin_gap;       // mean(t) - mean(t - k/L)
    std::vector<double> bin_term;
    std::vector<double> bin_term_sem;
    double lhs = 0.0, lhs_sem = 0.0;
    double rhs = 0.0;
    double c1_hat = 0.0, c_hat = 0.0;
    std::uint64_t replicas = 0;
};

// Hitting-time decomposition: bins sigma into grid cells, pairs each cell with
// the lagged mean gap, and compares against the fitted-tail majorant.
DecompositionReport verify_decomposition(const EnvSampler& env, const SimConfig& base, double t,
                                         std::uint64_t replicas, std::uint64_t seed,
                                         int y = 1,
                                         ExecutionPolicy policy = ExecutionPolicy::OpenMP);

struct SidetermReport {
    std::vector<double> times;
    std::vector<double> value;
    std::vector<double> sem;
    std::vector<double> running_max;
    double window_max = 0.0;
    double window_argmax = 0.0;
    bool non_increasing_beyond_4 = true;  // within 2 stderr per step
    std::uint64_t replicas = 0;
};

// E[1{first event is a move} 1{sigma^y > t} (M_t - M_t^y)] over a grid window.
SidetermReport verify_sideterm_bounded(const EnvSampler& env, const SimConfig& base,
                                       double window_max_t, std::uint64_t replicas,
                                       std::uint64_t seed, int y = 1,
                                       ExecutionPolicy policy = ExecutionPolicy::OpenMP);

}  // namespace brwre

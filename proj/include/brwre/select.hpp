#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "brwre/stats.hpp"

namespace brwre {

enum class SelectionKind { Oben, FixedJ, BSet, FinalIntersection };

std::string selection_kind_name(SelectionKind k);

struct SelectionParams {
    double delta = 0.5;    // in (0,1)
    int grid_l = 1;
    double eta = 0.0;
    double x_star = 1.0;   // estimated growth bound
    double c1 = 1.0;       // estimated hitting-tail rate

    // delta * e^{C1/L} / (e^{C1/(2L)} - 1)^2 < 1, the regime in which the
    // closed-form density bound is quotable. Violations are flagged, not fatal.
    bool density_bound_applicable() const;
    void validate() const;

    double oben_threshold() const;       // 2 x* / (L delta)
    double fixed_j_threshold(int j) const;  // (2/(L delta)) x* j e^{(C1/2L)(j-1)}
    // number of lags checked for membership at time t (>=1)
    int b_window(double t) const;
};

struct SelectionResult {
    SelectionKind kind = SelectionKind::Oben;
    int j = 0;  // FixedJ only
    std::vector<double> grid;
    std::vector<std::uint8_t> selected_mask;
    std::vector<std::uint8_t> censored_mask;   // excluded for lack of a successor
    std::vector<double> predicate;             // NaN where the predicate is not defined
    std::vector<double> threshold;             // NaN where the predicate is not defined
    std::vector<std::uint64_t> k_n;            // k_n[n-1] = # excluded among first n grid points
    SelectionParams params;

    std::vector<double> selected_times() const;
    std::vector<double> excluded_times() const;
    std::size_t selected_count() const;

    std::string to_json_string() const;
    std::string to_csv() const;
};

// keeps grid times whose one-step mean increment is below 2 x*/(L delta)
SelectionResult select_oben(const MeanSeries& series, const SelectionParams& params);

// keeps grid times whose lag-j mean increment is below the j-level threshold;
// times below the lag are excluded by convention
SelectionResult select_fixed_j(const MeanSeries& series, int j, const SelectionParams& params);

// keeps t iff the fixed-j predicate holds for every j in 1..b_window(t)
SelectionResult build_b_set(const MeanSeries& series, const SelectionParams& params);

SelectionResult intersect(const SelectionResult& a, const SelectionResult& b);

// Cumulative counts Ktilde_n of lag-1 increments exceeding the j-level
// threshold without the factor j — the comparison set of the counting bound
// K_n <= j * Ktilde_n + j.
std::vector<std::uint64_t> counting_reference(const MeanSeries& series, int j,
                                              const SelectionParams& params);

struct DensityReport {
    std::vector<double> enumerated;   // t_k, k = 1..m
    std::vector<double> ratios;       // t_k / k
    std::vector<double> k_n_over_n;
    std::size_t k_min = 1;            // ceil(0.2 m)
    double tail_max = 0.0;            // max_{k >= k_min} t_k/k
};

DensityReport density_report(const SelectionResult& sel);

}  // namespace brwre

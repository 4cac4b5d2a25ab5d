#include "brwre/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace brwre {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_series(const MeanSeries& series) {
    if (series.grid.empty()) throw std::invalid_argument("selection: empty series");
    if (series.grid.size() != series.mean.size())
        throw std::invalid_argument("selection: malformed series");
}

SelectionResult make_result(SelectionKind kind, const MeanSeries& series,
                            const SelectionParams& params) {
    SelectionResult res;
    res.kind = kind;
    res.grid = series.grid;
    res.params = params;
    const std::size_t g = series.grid.size();
    res.selected_mask.assign(g, 0);
    res.censored_mask.assign(g, 0);
    res.predicate.assign(g, kNan);
    res.threshold.assign(g, kNan);
    return res;
}

void finish_k_n(SelectionResult& res) {
    const std::size_t g = res.grid.size();
    res.k_n.resize(g);
    std::uint64_t excluded = 0;
    for (std::size_t n = 0; n < g; ++n) {
        if (!res.selected_mask[n]) ++excluded;
        res.k_n[n] = excluded;
    }
}

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string selection_kind_name(SelectionKind k) {
    switch (k) {
        case SelectionKind::Oben: return "oben";
        case SelectionKind::FixedJ: return "fixed_j";
        case SelectionKind::BSet: return "B_set";
        case SelectionKind::FinalIntersection: return "final_intersection";
    }
    return "?";
}

bool SelectionParams::density_bound_applicable() const {
    const double e_half = std::exp(c1 / (2.0 * grid_l));
    return delta * std::exp(c1 / grid_l) / ((e_half - 1.0) * (e_half - 1.0)) < 1.0;
}

void SelectionParams::validate() const {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("selection: delta must lie in (0,1)");
    if (grid_l < 1) throw std::invalid_argument("selection: L must be >= 1");
    if (!(x_star > 0.0)) throw std::invalid_argument("selection: x_star must be > 0");
}

double SelectionParams::oben_threshold() const { return 2.0 * x_star / (grid_l * delta); }

double SelectionParams::fixed_j_threshold(int j) const {
    return 2.0 / (grid_l * delta) * x_star * j * std::exp(c1 / (2.0 * grid_l) * (j - 1));
}

int SelectionParams::b_window(double t) const {
    if (t <= 1.0) return 1;  // log t <= 0: check j = 1 only
    const double w = std::ceil(2.0 * grid_l / c1 * std::log(t));
    return std::max(1, static_cast<int>(w));
}

std::vector<double> SelectionResult::selected_times() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (selected_mask[i]) out.push_back(grid[i]);
    return out;
}

std::vector<double> SelectionResult::excluded_times() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!selected_mask[i]) out.push_back(grid[i]);
    return out;
}

std::size_t SelectionResult::selected_count() const {
    std::size_t n = 0;
    for (auto f : selected_mask) n += f;
    return n;
}

std::string SelectionResult::to_json_string() const {
    nlohmann::ordered_json j;
    j["kind"] = selection_kind_name(kind);
    if (kind == SelectionKind::FixedJ) j["j"] = this->j;
    nlohmann::ordered_json p;
    p["delta"] = params.delta;
    p["L"] = params.grid_l;
    p["eta"] = params.eta;
    p["x_star"] = params.x_star;
    p["c1"] = params.c1;
    p["density_bound_applicable"] = params.density_bound_applicable();
    j["params"] = p;
    j["selected"] = selected_times();
    j["excluded"] = excluded_times();
    j["K_n"] = k_n;
    return j.dump();
}

std::string SelectionResult::to_csv() const {
    std::string out = "t,selected_flag,predicate_value,threshold\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out += fmt_g17(grid[i]);
        out += selected_mask[i] ? ",1," : ",0,";
        out += std::isnan(predicate[i]) ? "" : fmt_g17(predicate[i]);
        out += ",";
        out += std::isnan(threshold[i]) ? "" : fmt_g17(threshold[i]);
        out += "\n";
    }
    return out;
}

SelectionResult select_oben(const MeanSeries& series, const SelectionParams& params) {
    check_series(series);
    params.validate();
    SelectionResult res = make_result(SelectionKind::Oben, series, params);
    const std::size_t g = series.grid.size();
    const double thr = params.oben_threshold();
    for (std::size_t i = 0; i < g; ++i) {
        if (i + 1 >= g) {
            res.censored_mask[i] = 1;  // successor beyond the horizon
            continue;
        }
        res.predicate[i] = series.mean[i + 1] - series.mean[i];
        res.threshold[i] = thr;
        res.selected_mask[i] = res.predicate[i] <= thr ? 1 : 0;
    }
    finish_k_n(res);
    return res;
}

SelectionResult select_fixed_j(const MeanSeries& series, int j, const SelectionParams& params) {
    check_series(series);
    params.validate();
    if (j < 1) throw std::invalid_argument("select_fixed_j: j must be >= 1");
    if (static_cast<std::size_t>(j) >= series.grid.size())
        throw std::invalid_argument("select_fixed_j: lag j exceeds the series span");
    SelectionResult res = make_result(SelectionKind::FixedJ, series, params);
    res.j = j;
    const double thr = params.fixed_j_threshold(j);
    for (std::size_t i = static_cast<std::size_t>(j); i < series.grid.size(); ++i) {
        res.predicate[i] = series.mean[i] - series.mean[i - static_cast<std::size_t>(j)];
        res.threshold[i] = thr;
        res.selected_mask[i] = res.predicate[i] <= thr ? 1 : 0;
    }
    finish_k_n(res);
    return res;
}

SelectionResult build_b_set(const MeanSeries& series, const SelectionParams& params) {
    check_series(series);
    params.validate();
    if (!(params.c1 > 0.0)) throw std::invalid_argument("build_b_set: C1 must be > 0");
    SelectionResult res = make_result(SelectionKind::BSet, series, params);
    const std::size_t g = series.grid.size();
    for (std::size_t i = 0; i < g; ++i) {
        const double t = series.grid[i];
        const int window = params.b_window(t);
        bool in = true;
        double worst_margin = std::numeric_limits<double>::infinity();
        double worst_pred = kNan, worst_thr = kNan;
        for (int j = 1; j <= window; ++j) {
            if (static_cast<std::size_t>(j) > i) {
                in = false;  // below the lag: excluded by convention
                break;
            }
            const double pred = series.mean[i] - series.mean[i - static_cast<std::size_t>(j)];
            const double thr = params.fixed_j_threshold(j);
            if (thr - pred < worst_margin) {
                worst_margin = thr - pred;
                worst_pred = pred;
                worst_thr = thr;
            }
            if (pred > thr) {
                in = false;
                break;
            }
        }
        res.predicate[i] = worst_pred;
        res.threshold[i] = worst_thr;
        res.selected_mask[i] = in ? 1 : 0;
    }
    finish_k_n(res);
    return res;
}

SelectionResult intersect(const SelectionResult& a, const SelectionResult& b) {
    if (a.grid != b.grid) throw std::invalid_argument("intersect: grid mismatch");
    SelectionResult res;
    res.kind = SelectionKind::FinalIntersection;
    res.grid = a.grid;
    res.params = a.params;
    const std::size_t g = a.grid.size();
    res.selected_mask.resize(g);
    res.censored_mask.resize(g);
    res.predicate.assign(g, kNan);
    res.threshold.assign(g, kNan);
    for (std::size_t i = 0; i < g; ++i) {
        res.selected_mask[i] = (a.selected_mask[i] && b.selected_mask[i]) ? 1 : 0;
        res.censored_mask[i] = (a.censored_mask[i] || b.censored_mask[i]) ? 1 : 0;
    }
    finish_k_n(res);
    for (std::size_t n = 0; n < g; ++n) {
        if (res.k_n[n] > a.k_n[n] + b.k_n[n])
            throw std::logic_error("intersect: K_n exceeded the union bound");
    }
    return res;
}

std::vector<std::uint64_t> counting_reference(const MeanSeries& series, int j,
                                              const SelectionParams& params) {
    check_series(series);
    params.validate();
    if (j < 1) throw std::invalid_argument("counting_reference: j must be >= 1");
    const double thr = params.fixed_j_threshold(j) / j;
    const std::size_t g = series.grid.size();
    std::vector<std::uint64_t> ktilde(g);
    std::uint64_t bad = 0;
    for (std::size_t n = 0; n < g; ++n) {
        if (n >= 1 && series.mean[n] - series.mean[n - 1] > thr) ++bad;
        ktilde[n] = bad;
    }
    return ktilde;
}

DensityReport density_report(const SelectionResult& sel) {
    DensityReport rep;
    rep.enumerated = sel.selected_times();
    if (rep.enumerated.empty()) throw std::invalid_argument("density_report: empty selection");
    rep.ratios.resize(rep.enumerated.size());
    for (std::size_t k = 0; k < rep.enumerated.size(); ++k)
        rep.ratios[k] = rep.enumerated[k] / static_cast<double>(k + 1);
    rep.k_n_over_n.resize(sel.k_n.size());
    for (std::size_t n = 0; n < sel.k_n.size(); ++n)
        rep.k_n_over_n[n] = static_cast<double>(sel.k_n[n]) / static_cast<double>(n + 1);
    const auto m = rep.enumerated.size();
    rep.k_min = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(m)));
    if (rep.k_min < 1) rep.k_min = 1;
    rep.tail_max = 0.0;
    for (std::size_t k = rep.k_min; k <= m; ++k)
        rep.tail_max = std::max(rep.tail_max, rep.ratios[k - 1]);
    return rep;
}

}  // namespace brwre

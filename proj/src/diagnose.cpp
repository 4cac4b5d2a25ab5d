#include "brwre/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace brwre {

namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// nearest-rank quantile of a sorted sample
double nearest_rank(const std::vector<double>& sorted, double p) {
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

}  // namespace

double TightnessReport::max_spread_selected() const {
    return *std::max_element(spread.begin(), spread.end());
}

double TightnessReport::median_spread_selected() const {
    std::vector<double> s = spread;
    std::sort(s.begin(), s.end());
    return nearest_rank(s, 0.5);
}

double TightnessReport::max_spread_full() const {
    return *std::max_element(full_spread.begin(), full_spread.end());
}

std::string TightnessReport::to_csv() const {
    std::string out = "t,q05,q25,q50,q75,q95,spread\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
        out += fmt_g17(times[i]) + "," + fmt_g17(q05[i]) + "," + fmt_g17(q25[i]) + "," +
               fmt_g17(q50[i]) + "," + fmt_g17(q75[i]) + "," + fmt_g17(q95[i]) + "," +
               fmt_g17(spread[i]) + "\n";
    }
    return out;
}

std::string TightnessReport::summary_json() const {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["max_spread_selected"] = max_spread_selected();
    j["max_spread_full"] = max_spread_full();
    j["ratio"] = max_spread_full() > 0 ? max_spread_selected() / max_spread_full() : 1.0;
    j["median_spread_selected"] = median_spread_selected();
    j["replicas"] = replicas;
    return j.dump();
}

TightnessReport tightness_report(const EnvSampler& env, const SelectionResult& sel,
                                 const MeanSeries& series, std::uint64_t replicas,
                                 std::uint64_t seed, ExecutionPolicy policy,
                                 const SimConfig& base) {
    if (sel.grid != series.grid)
        throw std::invalid_argument("tightness_report: selection and series grids differ");
    if (replicas < 100) throw std::invalid_argument("tightness_report: replicas must be >= 100");
    if (sel.selected_count() == 0)
        throw std::invalid_argument("tightness_report: empty selection");

    SimConfig cfg = base;
    cfg.grid_l = series.grid_l;
    cfg.grid_eta = series.eta;
    cfg.horizon = series.horizon();
    const std::size_t g = series.grid.size();

    std::vector<double> centered(replicas * g);
    for_each_replica(replicas, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Diagnose, r);
        auto rng = make_replica_rng(seed, Stage::Diagnose, r, 0);
        const TrajectoryRecord rec = run(cfg, e, rng);
        for (std::size_t i = 0; i < g; ++i)
            centered[r * g + i] = static_cast<double>(rec.max_on_grid[i]) - series.mean[i];
    });

    TightnessReport rep;
    rep.replicas = replicas;
    rep.full_grid = series.grid;
    rep.full_spread.resize(g);
    std::vector<double> col(replicas);
    for (std::size_t i = 0; i < g; ++i) {
        for (std::uint64_t r = 0; r < replicas; ++r) col[r] = centered[r * g + i];
        std::sort(col.begin(), col.end());
        const double lo = nearest_rank(col, 0.05);
        const double hi = nearest_rank(col, 0.95);
        rep.full_spread[i] = hi - lo;
        if (sel.selected_mask[i]) {
            rep.times.push_back(series.grid[i]);
            rep.q05.push_back(lo);
            rep.q25.push_back(nearest_rank(col, 0.25));
            rep.q50.push_back(nearest_rank(col, 0.50));
            rep.q75.push_back(nearest_rank(col, 0.75));
            rep.q95.push_back(hi);
            rep.spread.push_back(hi - lo);
        }
    }
    return rep;
}

DecompositionReport verify_decomposition(const EnvSampler& env, const SimConfig& base, double t,
                                         std::uint64_t replicas, std::uint64_t seed, int y,
                                         ExecutionPolicy policy) {
    if (y != 1 && y != -1) throw std::invalid_argument("verify_decomposition: y must be +-1");
    const int L = base.grid_l;
    const double eta = base.grid_eta;
    const auto bins = static_cast<std::size_t>(std::floor(L * t + 1e-9));

    // lag gaps from a mean series over [0, t]
    EstimateOptions eopt;
    eopt.env = env;
    eopt.sim = base;
    eopt.sim.horizon = t;
    eopt.replicas = replicas;
    eopt.seed = seed;
    eopt.stage = Stage::Estimate;
    eopt.policy = policy;
    const MeanSeries series = estimate_mean_series(eopt);
    const std::size_t it = series.index_of(t);

    // empirical sigma bins and fitted tail on the same cells
    std::vector<double> sigmas(replicas);
    for_each_replica(replicas, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Tail, r);
        SimConfig cfg = base;
        cfg.x0 = y;
        cfg.horizon = t;
        cfg.sample_grid = false;
        auto rng = make_replica_rng(seed, Stage::Tail, r, 0);
        const HittingRun hit = run_hitting(cfg, e, rng, HitMode::StopAtHit);
        sigmas[r] = hit.sigma ? *hit.sigma : std::numeric_limits<double>::infinity();
    });

    std::vector<double> zg;
    for (std::size_t k = 0; k <= bins; ++k) zg.push_back(static_cast<double>(k) / L);
    SurvivalCurve curve = estimate_sigma_tail(env, y, zg, replicas, seed + 1, policy, t);

    DecompositionReport rep;
    rep.t = t;
    rep.y = y;
    rep.replicas = replicas;
    rep.c1_hat = curve.c1_hat;
    rep.c_hat = curve.c_hat;
    const auto n = static_cast<double>(replicas);
    double lhs = 0.0, var = 0.0, rhs = 0.0;
    for (std::size_t k = 1; k <= bins; ++k) {
        const double z_lo = static_cast<double>(k - 1) / L;
        const double z_hi = static_cast<double>(k) / L;
        std::uint64_t cnt = 0;
        for (double s : sigmas)
            if (s > z_lo && s <= z_hi) ++cnt;
        // k = 1 cell also owns sigma <= 0 mass (none: y != 0)
        const double p = static_cast<double>(cnt) / n;
        const double gap = series.mean[it] - series.mean[it - k];
        const double gap_sem =
            std::sqrt(series.sem[it] * series.sem[it] + series.sem[it - k] * series.sem[it - k]);
        const double p_sem = std::sqrt(p * (1.0 - p) / n);
        const double term = p * gap;
        const double term_sem =
            std::sqrt(p * p * gap_sem * gap_sem + gap * gap * p_sem * p_sem);
        rep.bin_prob.push_back(p);
        rep.bin_gap.push_back(gap);
        rep.bin_term.push_back(term);
        rep.bin_term_sem.push_back(term_sem);
        lhs += term;
        var += term_sem * term_sem;
        rhs += rep.c_hat * std::exp(-rep.c1_hat * z_lo) * gap;
    }
    if (eta > 0.0) {
        std::uint64_t cnt = 0;
        for (double s : sigmas)
            if (s >= t - eta && s <= t) ++cnt;
        lhs += static_cast<double>(cnt) / n * series.mean[it];
    }
    rhs += rep.c_hat * std::exp(-rep.c1_hat * (t - eta)) * series.mean[it];
    rep.lhs = lhs;
    rep.lhs_sem = std::sqrt(var);
    rep.rhs = rhs;
    return rep;
}

SidetermReport verify_sideterm_bounded(const EnvSampler& env, const SimConfig& base,
                                       double window_max_t, std::uint64_t replicas,
                                       std::uint64_t seed, int y, ExecutionPolicy policy) {
    if (y != 1 && y != -1) throw std::invalid_argument("verify_sideterm_bounded: y must be +-1");
    SimConfig cfg = base;
    cfg.horizon = window_max_t;
    cfg.sample_grid = true;
    SimConfig hit_cfg = cfg;
    hit_cfg.x0 = y;
    SimConfig classify_cfg = base;
    classify_cfg.horizon = 0.0;
    classify_cfg.sample_grid = false;

    const auto grid = grid_times(base.grid_l, base.grid_eta, window_max_t);
    const std::size_t g = grid.size();
    std::vector<double> vals(replicas * g);

    for_each_replica(replicas, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Verify, r);
        auto rng0 = make_replica_rng(seed, Stage::Verify, r, 0);
        auto rngh = make_replica_rng(seed, Stage::Verify, r, 3);
        auto rngc = make_replica_rng(seed, Stage::Verify, r, 2);
        const TrajectoryRecord copy = run(cfg, e, rng0);
        const HittingRun hit = run_hitting(hit_cfg, e, rngh, HitMode::FullCoupling);
        const bool move_first =
            run_dekking_host_branch(classify_cfg, e, rngc).branch == Branch::MoveFirst;
        const double sigma =
            hit.sigma ? *hit.sigma : std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g; ++i) {
            const bool alive = sigma > grid[i];
            vals[r * g + i] =
                (move_first && alive)
                    ? static_cast<double>(copy.max_on_grid[i] - hit.full.max_on_grid[i])
                    : 0.0;
        }
    });

    SidetermReport rep;
    rep.replicas = replicas;
    rep.times = grid;
    rep.value.resize(g);
    rep.sem.resize(g);
    rep.running_max.resize(g);
    std::vector<double> col(replicas);
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g; ++i) {
        for (std::uint64_t r = 0; r < replicas; ++r) col[r] = vals[r * g + i];
        const MeanSem ms = mean_sem(col);
        rep.value[i] = ms.mean;
        rep.sem[i] = ms.sem;
        running = std::max(running, ms.mean);
        rep.running_max[i] = running;
        if (i == 0 || rep.value[i] > rep.window_max) {
            rep.window_max = rep.value[i];
            rep.window_argmax = grid[i];
        }
    }
    for (std::size_t i = 1; i < g; ++i) {
        if (grid[i - 1] >= 4.0 &&
            rep.value[i] > rep.value[i - 1] + 2.0 * std::hypot(rep.sem[i], rep.sem[i - 1]))
            rep.non_increasing_beyond_4 = false;
    }
    return rep;
}

}  // namespace brwre

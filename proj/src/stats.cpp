#include "brwre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "brwre/special.hpp"

namespace brwre {

namespace {

constexpr std::uint64_t kEnvRole = 0xEE;

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

MeanSem mean_sem_raw(const double* xs, std::uint64_t n) {
    MeanSem out;
    out.n = n;
    if (n == 0) return out;
    double mean = 0.0, m2 = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double d = xs[i] - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (xs[i] - mean);
    }
    out.mean = mean;
    if (n > 1) out.sem = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    return out;
}

}  // namespace

std::string mode_name(EnvMode m) { return m == EnvMode::Quenched ? "quenched" : "annealed"; }

EnvMode mode_from_name(const std::string& name) {
    if (name == "quenched") return EnvMode::Quenched;
    if (name == "annealed") return EnvMode::Annealed;
    throw std::invalid_argument("unknown mode: " + name);
}

Environment EnvSampler::for_replica(Stage stage, std::uint64_t replica) const {
    if (mode == EnvMode::Quenched) return Environment(spec);
    EnvironmentSpec s = spec;
    s.seed = derive_key(spec.seed, static_cast<std::uint64_t>(stage), replica, kEnvRole);
    return Environment(s);
}

MeanSem mean_sem(std::span<const double> xs) { return mean_sem_raw(xs.data(), xs.size()); }

double closed_form_c(double xi0, int grid_l) {
    if (!(xi0 > 0.0)) throw std::domain_error("closed_form_c: xi0 must be > 0");
    if (grid_l < 1) throw std::domain_error("closed_form_c: L must be >= 1");
    return -std::expm1(-(xi0 + 1.0) / grid_l) * xi0 / (xi0 + 1.0);
}

std::size_t MeanSeries::index_of(double t) const {
    const auto i = static_cast<long long>(std::llround((t - eta) * grid_l));
    if (i < 0 || i >= static_cast<long long>(grid.size()) ||
        std::fabs(grid[static_cast<std::size_t>(i)] - t) > 1e-9)
        throw std::invalid_argument("time " + std::to_string(t) + " is not on the series grid");
    return static_cast<std::size_t>(i);
}

std::string MeanSeries::to_csv() const {
    std::string out = "t,mean,stderr\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        out += fmt_g17(grid[i]) + "," + fmt_g17(mean[i]) + "," + fmt_g17(sem[i]) + "\n";
    return out;
}

MeanSeries MeanSeries::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,mean,stderr", 0) != 0)
        throw std::invalid_argument("mean series csv: bad header");
    MeanSeries s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double t, m, se;
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &t, &m, &se) != 3)
            throw std::invalid_argument("mean series csv: bad row: " + line);
        s.grid.push_back(t);
        s.mean.push_back(m);
        s.sem.push_back(se);
    }
    if (s.grid.size() < 2) throw std::invalid_argument("mean series csv: need >= 2 rows");
    const double step = s.grid[1] - s.grid[0];
    s.grid_l = static_cast<int>(std::llround(1.0 / step));
    s.eta = s.grid[0];
    return s;
}

MeanSeries estimate_mean_series(const EstimateOptions& opt) {
    if (opt.replicas < 2) throw std::invalid_argument("estimate_mean_series: replicas >= 2");
    opt.sim.validate();
    const auto grid = grid_times(opt.sim.grid_l, opt.sim.grid_eta, opt.sim.horizon);
    const std::size_t g = grid.size();
    std::vector<double> values(opt.replicas * g);

    for_each_replica(opt.replicas, opt.policy, [&](std::uint64_t r) {
        const Environment env = opt.env.for_replica(opt.stage, r);
        auto rng = make_replica_rng(opt.seed, opt.stage, r, 0);
        const TrajectoryRecord rec = run(opt.sim, env, rng);
        for (std::size_t i = 0; i < g; ++i)
            values[r * g + i] = static_cast<double>(rec.max_on_grid[i]);
    });

    MeanSeries out;
    out.grid_l = opt.sim.grid_l;
    out.eta = opt.sim.grid_eta;
    out.grid = grid;
    out.mode = opt.env.mode;
    out.replicas = opt.replicas;
    out.mean.resize(g);
    out.sem.resize(g);
    std::vector<double> col(opt.replicas);
    for (std::size_t i = 0; i < g; ++i) {
        for (std::uint64_t r = 0; r < opt.replicas; ++r) col[r] = values[r * g + i];
        const MeanSem ms = mean_sem(col);
        out.mean[i] = ms.mean;
        out.sem[i] = ms.sem;
    }
    return out;
}

std::string SurvivalCurve::to_csv() const {
    std::string out = "z,survival,n\n";
    for (std::size_t i = 0; i < z.size(); ++i)
        out += fmt_g17(z[i]) + "," + fmt_g17(survival[i]) + "," + std::to_string(at_risk[i]) + "\n";
    return out;
}

SurvivalCurve estimate_sigma_tail(const EnvSampler& env, int y, std::vector<double> z_grid,
                                  std::uint64_t replicas, std::uint64_t seed,
                                  ExecutionPolicy policy, std::optional<double> deadline) {
    if (y != 1 && y != -1) throw std::invalid_argument("estimate_sigma_tail: y must be +-1");
    if (z_grid.empty() || !std::is_sorted(z_grid.begin(), z_grid.end()))
        throw std::invalid_argument("estimate_sigma_tail: z grid must be increasing");
    const double horizon = deadline.value_or(z_grid.back());

    std::vector<double> sigmas(replicas);
    for_each_replica(replicas, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Tail, r);
        SimConfig cfg;
        cfg.x0 = y;
        cfg.horizon = horizon;
        cfg.sample_grid = false;
        auto rng = make_replica_rng(seed, Stage::Tail, r, 0);
        const HittingRun hit = run_hitting(cfg, e, rng, HitMode::StopAtHit);
        sigmas[r] = hit.sigma ? *hit.sigma : std::numeric_limits<double>::infinity();
    });

    SurvivalCurve curve;
    curve.y = y;
    curve.replicas = replicas;
    curve.z = std::move(z_grid);
    curve.survival.resize(curve.z.size());
    curve.at_risk.resize(curve.z.size());
    std::uint64_t hits = 0;
    for (double s : sigmas)
        if (std::isfinite(s)) ++hits;
    if (hits == 0) throw AllCensored("estimate_sigma_tail: no replica hit 0 before the deadline");
    for (std::size_t i = 0; i < curve.z.size(); ++i) {
        std::uint64_t n = 0;
        for (double s : sigmas)
            if (s >= curve.z[i]) ++n;
        curve.at_risk[i] = n;
        curve.survival[i] = static_cast<double>(n) / static_cast<double>(replicas);
    }

    // least squares on log-survival, dropping points too deep in the tail
    const double floor_s = 20.0 / static_cast<double>(replicas);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < curve.z.size(); ++i) {
        if (curve.survival[i] >= floor_s && curve.survival[i] > 0.0) {
            xs.push_back(curve.z[i]);
            ys.push_back(std::log(curve.survival[i]));
        }
    }
    if (xs.size() < 2) throw std::runtime_error("estimate_sigma_tail: too few points to fit");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double fit = intercept + slope * xs[i];
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
    }
    curve.c1_hat = -slope;
    curve.c_hat = std::exp(intercept);
    curve.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return curve;
}

GapEstimate estimate_abs_gap(const EnvSampler& env, const SimConfig& base, double t,
                             std::uint64_t replicas, std::uint64_t seed, ExecutionPolicy policy) {
    SimConfig cfg = base;
    cfg.horizon = t;
    cfg.sample_grid = false;
    GapEstimate out;
    out.t = t;
    out.abs_diff_samples.resize(replicas);
    out.m1_samples.resize(replicas);
    for_each_replica(replicas, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Verify, r);
        auto rng1 = make_replica_rng(seed, Stage::Verify, r, 0);
        auto rng2 = make_replica_rng(seed, Stage::Verify, r, 1);
        const auto m1 = run(cfg, e, rng1).final_max;
        const auto m2 = run(cfg, e, rng2).final_max;
        out.abs_diff_samples[r] = std::fabs(static_cast<double>(m1 - m2));
        out.m1_samples[r] = static_cast<double>(m1);
    });
    const MeanSem ms = mean_sem(out.abs_diff_samples);
    out.value = ms.mean;
    out.sem = ms.sem;
    return out;
}

std::string InequalityReport::to_json_string(std::uint64_t seed) const {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["t"] = t;
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    j["slack"] = slack;
    j["stderr"] = slack_sem;
    j["c"] = c_value;
    j["replicas"] = replicas;
    j["seed"] = seed;
    return j.dump();
}

InequalityReport verify_main_inequality(const EnvSampler& env, const SimConfig& base, double t,
                                        std::uint64_t replicas, std::uint64_t seed,
                                        ExecutionPolicy policy) {
    SimConfig long_cfg = base;
    long_cfg.horizon = t + base.cutoff();
    long_cfg.sample_grid = true;
    SimConfig short_cfg = base;
    short_cfg.horizon = t;
    short_cfg.sample_grid = false;
    SimConfig dh_cfg = short_cfg;

    const auto grid = grid_times(base.grid_l, base.grid_eta, long_cfg.horizon);
    std::size_t it = 0;
    while (it < grid.size() && std::fabs(grid[it] - t) > 1e-9) ++it;
    if (it + 1 >= grid.size())
        throw std::invalid_argument("verify_main_inequality: t and t+1/L must be grid times");

    std::vector<double> a(replicas), b(replicas), d(replicas);
    for_each_replica(replicas, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Verify, r);
        auto rng1 = make_replica_rng(seed, Stage::Verify, r, 0);
        auto rng2 = make_replica_rng(seed, Stage::Verify, r, 1);
        auto rng3 = make_replica_rng(seed, Stage::Verify, r, 2);
        const TrajectoryRecord rec1 = run(long_cfg, e, rng1);
        const double m1_t = static_cast<double>(rec1.max_on_grid[it]);
        const double m1_next = static_cast<double>(rec1.max_on_grid[it + 1]);
        const double m2_t = static_cast<double>(run(short_cfg, e, rng2).final_max);
        const DekkingHostRun dh = run_dekking_host_branch(dh_cfg, e, rng3);
        a[r] = std::fabs(m1_t - m2_t);
        b[r] = m1_next - m1_t;
        d[r] = dh.branch != Branch::SplitFirst
                   ? m1_t - static_cast<double>(*dh.final_max)
                   : 0.0;
    });

    InequalityReport rep;
    rep.t = t;
    rep.replicas = replicas;
    const double xi_for_c =
        env.mode == EnvMode::Annealed ? env.spec.ei() : Environment(env.spec).rate_at(0);
    rep.c_value = closed_form_c(xi_for_c, base.grid_l);
    const double cinv = 1.0 / rep.c_value;

    const MeanSem msa = mean_sem(a), msb = mean_sem(b), msd = mean_sem(d);
    rep.lhs = msa.mean;
    rep.lhs_sem = msa.sem;
    rep.increment_term = msb.mean;
    rep.increment_sem = msb.sem;
    rep.indicator_term = msd.mean;
    rep.indicator_sem = msd.sem;
    rep.rhs = cinv * (msb.mean + msd.mean);

    std::vector<double> slack(replicas);
    for (std::uint64_t r = 0; r < replicas; ++r) slack[r] = cinv * (b[r] + d[r]) - a[r];
    const MeanSem mss = mean_sem(slack);
    rep.slack = mss.mean;
    rep.slack_sem = mss.sem;
    rep.rhs_sem = std::sqrt(cinv * cinv * (msb.sem * msb.sem + msd.sem * msd.sem));
    return rep;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult out;
    out.statistic = d;
    const double ne = std::sqrt(na * nb / (na + nb));
    out.p_value = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
    return out;
}

FirstJumpReport verify_first_jump_split(const EnvSampler& env, const SimConfig& base, double t,
                                        std::uint64_t replicas, std::uint64_t seed,
                                        ExecutionPolicy policy) {
    SimConfig copy_cfg = base;
    copy_cfg.horizon = t;
    copy_cfg.sample_grid = false;
    SimConfig plus_cfg = copy_cfg, minus_cfg = copy_cfg;
    plus_cfg.x0 = 1;
    minus_cfg.x0 = -1;

    std::vector<double> lhs(replicas), rhs(replicas), cut(replicas), gap(replicas);
    for_each_replica(replicas, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Verify, r);
        auto rng1 = make_replica_rng(seed, Stage::Verify, r, 0);
        auto rng3 = make_replica_rng(seed, Stage::Verify, r, 2);
        auto rngp = make_replica_rng(seed, Stage::Verify, r, 3);
        auto rngm = make_replica_rng(seed, Stage::Verify, r, 4);
        const double m1 = static_cast<double>(run(copy_cfg, e, rng1).final_max);
        const DekkingHostRun dh = run_dekking_host_branch(copy_cfg, e, rng3);
        const double mp = static_cast<double>(run(plus_cfg, e, rngp).final_max);
        const double mm = static_cast<double>(run(minus_cfg, e, rngm).final_max);
        const double mdh = static_cast<double>(*dh.final_max);
        const bool move = dh.branch == Branch::MoveFirst;
        lhs[r] = move ? m1 - mdh : 0.0;
        rhs[r] = move ? 0.5 * ((m1 - mp) + (m1 - mm)) : 0.0;
        cut[r] = dh.branch == Branch::CutoffFirst ? m1 - mdh : 0.0;
        gap[r] = mp - mm;
    });

    FirstJumpReport rep;
    rep.t = t;
    rep.replicas = replicas;
    rep.lhs = mean_sem(lhs).mean;
    rep.rhs = mean_sem(rhs).mean;
    std::vector<double> diff(replicas);
    for (std::uint64_t r = 0; r < replicas; ++r) diff[r] = lhs[r] - rhs[r];
    const MeanSem msd = mean_sem(diff);
    rep.diff = msd.mean;
    rep.diff_sem = msd.sem;
    const MeanSem msc = mean_sem(cut);
    rep.cutoff_term = msc.mean;
    rep.cutoff_sem = msc.sem;
    const MeanSem msg = mean_sem(gap);
    rep.translation_gap = msg.mean;
    rep.translation_sem = msg.sem;
    return rep;
}

BranchFrequencies estimate_branch_frequencies(const EnvSampler& env, const SimConfig& base,
                                              std::uint64_t replicas, std::uint64_t seed,
                                              ExecutionPolicy policy) {
    SimConfig cfg = base;
    cfg.horizon = 0.0;
    cfg.sample_grid = false;
    std::vector<std::uint8_t> branch(replicas);
    for_each_replica(replicas, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Verify, r);
        auto rng = make_replica_rng(seed, Stage::Verify, r, 2);
        branch[r] = static_cast<std::uint8_t>(run_dekking_host_branch(cfg, e, rng).branch);
    });
    BranchFrequencies out;
    out.replicas = replicas;
    for (auto b : branch) {
        if (b == static_cast<std::uint8_t>(Branch::SplitFirst)) out.split_first += 1.0;
        else if (b == static_cast<std::uint8_t>(Branch::MoveFirst)) out.move_first += 1.0;
        else out.cutoff_first += 1.0;
    }
    out.split_first /= static_cast<double>(replicas);
    out.move_first /= static_cast<double>(replicas);
    out.cutoff_first /= static_cast<double>(replicas);
    return out;
}

std::vector<double> sample_split_first_max(const EnvSampler& env, const SimConfig& base, double t,
                                           std::uint64_t n_samples, std::uint64_t seed,
                                           ExecutionPolicy policy) {
    SimConfig cfg = base;
    cfg.horizon = t;
    cfg.sample_grid = false;
    const double p_min = closed_form_c(env.spec.ei(), base.grid_l);

    std::vector<double> out;
    out.reserve(n_samples);
    std::uint64_t attempt_base = 0;
    while (out.size() < n_samples) {
        const auto missing = n_samples - out.size();
        const auto batch = static_cast<std::uint64_t>(
            std::ceil(static_cast<double>(missing) / p_min * 1.15)) + 8;
        std::vector<double> slot(batch, std::numeric_limits<double>::quiet_NaN());
        for_each_replica(batch, policy, [&](std::uint64_t k) {
            const std::uint64_t attempt = attempt_base + k;
            const Environment e = env.for_replica(Stage::Verify, attempt);
            auto rng = make_replica_rng(seed, Stage::Verify, attempt, 2);
            const DekkingHostRun dh =
                run_dekking_host_branch(cfg, e, rng, Branch::SplitFirst);
            if (dh.final_max) slot[k] = static_cast<double>(*dh.final_max);
        });
        for (double v : slot) {
            if (!std::isnan(v)) {
                out.push_back(v);
                if (out.size() == n_samples) break;
            }
        }
        attempt_base += batch;
    }
    return out;
}

std::vector<double> sample_max_of_two(const EnvSampler& env, const SimConfig& base, double t,
                                      std::uint64_t n_samples, std::uint64_t seed,
                                      ExecutionPolicy policy) {
    SimConfig cfg = base;
    cfg.horizon = t;
    cfg.sample_grid = false;
    std::vector<double> out(n_samples);
    for_each_replica(n_samples, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Verify, r);
        auto rng1 = make_replica_rng(seed, Stage::Verify, r, 0);
        auto rng2 = make_replica_rng(seed, Stage::Verify, r, 1);
        const auto m1 = run(cfg, e, rng1).final_max;
        const auto m2 = run(cfg, e, rng2).final_max;
        out[r] = static_cast<double>(std::max(m1, m2));
    });
    return out;
}

PopulationStats estimate_population(const EnvSampler& env, const SimConfig& base,
                                    std::uint64_t replicas, std::uint64_t seed,
                                    ExecutionPolicy policy) {
    SimConfig cfg = base;
    cfg.sample_grid = false;
    PopulationStats out;
    out.counts.resize(replicas);
    for_each_replica(replicas, policy, [&](std::uint64_t r) {
        const Environment e = env.for_replica(Stage::Verify, r);
        auto rng = make_replica_rng(seed, Stage::Verify, r, 0);
        out.counts[r] = run(cfg, e, rng).final_population;
    });
    std::vector<double> xs(replicas);
    for (std::uint64_t r = 0; r < replicas; ++r) xs[r] = static_cast<double>(out.counts[r]);
    const MeanSem ms = mean_sem(xs);
    out.mean = ms.mean;
    out.sem = ms.sem;
    return out;
}

double geometric_gof_pvalue(const std::vector<std::uint64_t>& counts, double p) {
    if (counts.empty()) throw std::invalid_argument("geometric_gof_pvalue: empty sample");
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("geometric_gof_pvalue: p in (0,1)");
    const double n = static_cast<double>(counts.size());
    // choose the largest k with expected count >= 5, merge the rest into a tail bin
    std::size_t k_max = 1;
    while (n * p * std::pow(1.0 - p, static_cast<double>(k_max)) >= 5.0 && k_max < 10000) ++k_max;
    if (n * std::pow(1.0 - p, static_cast<double>(k_max)) < 5.0 && k_max > 1) --k_max;

    std::vector<double> observed(k_max + 1, 0.0);
    for (auto c : counts) {
        if (c == 0) throw std::invalid_argument("geometric_gof_pvalue: population cannot be 0");
        const std::size_t bin = std::min<std::size_t>(c - 1, k_max);
        observed[bin] += 1.0;
    }
    double stat = 0.0;
    for (std::size_t bin = 0; bin <= k_max; ++bin) {
        const double expected =
            bin < k_max ? n * p * std::pow(1.0 - p, static_cast<double>(bin))
                        : n * std::pow(1.0 - p, static_cast<double>(k_max));
        stat += (observed[bin] - expected) * (observed[bin] - expected) / expected;
    }
    return chi2_sf(stat, static_cast<int>(k_max));
}

double estimate_x_star(const MeanSeries& series, double safety_factor) {
    const double t_min = series.horizon() / 2.0;
    double best = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < series.grid.size(); ++i) {
        if (series.grid[i] >= t_min && series.grid[i] > 0.0) {
            best = std::max(best, series.mean[i] / series.grid[i]);
            any = true;
        }
    }
    if (!any || !(best > 0.0))
        throw std::runtime_error("estimate_x_star: no usable grid point with positive mean");
    return safety_factor * best;
}

}  // namespace brwre

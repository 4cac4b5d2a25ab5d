#include "brwre/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace brwre {

namespace {

ordered_json default_config_json() {
    ordered_json j;
    j["schema"] = 1;
    j["environment"] = {{"family", "two_point"}, {"lo", 0.5}, {"hi", 1.5}, {"p_lo", 0.5}};
    j["sim"] = {{"x0", 0}, {"T", 10.0}, {"L", 1}, {"eta", 0.0}, {"population_cap", 2000000}};
    j["replicas"] = {{"simulate", 1000},
                     {"estimate", 5000},
                     {"tail", 10000},
                     {"diagnose", 2000},
                     {"verify", 10000}};
    j["delta"] = 0.5;
    j["seeds"] = {{"env_seed", 9001}, {"estimate_seed", 9002}, {"diagnose_seed", 9003}};
    j["mode"] = "quenched";
    j["tightness_multiplier"] = 1.25;
    j["sigma_y"] = 1;
    j["z_max"] = 6.0;
    j["output_dir"] = "";
    return j;
}

void deep_merge(ordered_json& base, const json& patch) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
            deep_merge(base[it.key()], *it);
        } else {
            base[it.key()] = *it;
        }
    }
}

ExperimentConfig parse_config(const ordered_json& j) {
    ExperimentConfig cfg;
    const auto& env = j.at("environment");
    cfg.environment.family = family_from_name(env.at("family").get<std::string>());
    cfg.environment.lo = env.at("lo").get<double>();
    cfg.environment.hi = env.contains("hi") && !env["hi"].is_null() ? env["hi"].get<double>()
                                                                    : cfg.environment.lo;
    if (env.contains("p_lo") && !env["p_lo"].is_null())
        cfg.environment.p_lo = env["p_lo"].get<double>();

    const auto& sim = j.at("sim");
    cfg.sim.x0 = sim.at("x0").get<std::int64_t>();
    cfg.sim.horizon = sim.at("T").get<double>();
    cfg.sim.grid_l = sim.at("L").get<int>();
    cfg.sim.grid_eta = sim.at("eta").get<double>();
    cfg.sim.population_cap = sim.at("population_cap").get<std::uint64_t>();

    const auto& rep = j.at("replicas");
    cfg.replicas.simulate = rep.at("simulate").get<std::uint64_t>();
    cfg.replicas.estimate = rep.at("estimate").get<std::uint64_t>();
    cfg.replicas.tail = rep.at("tail").get<std::uint64_t>();
    cfg.replicas.diagnose = rep.at("diagnose").get<std::uint64_t>();
    cfg.replicas.verify = rep.at("verify").get<std::uint64_t>();

    cfg.delta = j.at("delta").get<double>();
    const auto& seeds = j.at("seeds");
    cfg.env_seed = seeds.at("env_seed").get<std::uint64_t>();
    cfg.estimate_seed = seeds.at("estimate_seed").get<std::uint64_t>();
    cfg.diagnose_seed = seeds.at("diagnose_seed").get<std::uint64_t>();
    cfg.mode = mode_from_name(j.at("mode").get<std::string>());
    cfg.tightness_multiplier = j.at("tightness_multiplier").get<double>();
    cfg.sigma_y = j.at("sigma_y").get<int>();
    cfg.z_max = j.at("z_max").get<double>();
    cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.environment.seed = cfg.env_seed;
    return cfg;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::vector<double> tail_z_grid(const ExperimentConfig& cfg) {
    std::vector<double> z;
    for (int k = 1; k <= static_cast<int>(std::floor(cfg.z_max + 1e-9)); ++k)
        z.push_back(static_cast<double>(k));
    return z;
}

// three interior grid times with a successor, used for inequality reporting
std::vector<double> inequality_times(const ExperimentConfig& cfg) {
    const auto grid = grid_times(cfg.sim.grid_l, cfg.sim.grid_eta, cfg.sim.horizon);
    std::vector<double> out;
    for (double f : {0.2, 0.4, 0.6}) {
        const auto idx = static_cast<std::size_t>(
            std::llround(f * static_cast<double>(grid.size() - 1)));
        if (idx + 1 < grid.size() && grid[idx] > 0.0) out.push_back(grid[idx]);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

MeanSeries pipeline_series(const ExperimentConfig& cfg) {
    EstimateOptions opt;
    opt.env = cfg.sampler();
    opt.sim = cfg.sim;
    opt.replicas = cfg.replicas.estimate;
    opt.seed = cfg.estimate_seed;
    opt.stage = Stage::Estimate;
    opt.policy = cfg.policy;
    return estimate_mean_series(opt);
}

SurvivalCurve pipeline_tail(const ExperimentConfig& cfg) {
    return estimate_sigma_tail(cfg.sampler(), cfg.sigma_y, tail_z_grid(cfg), cfg.replicas.tail,
                               cfg.estimate_seed, cfg.policy);
}

std::string sigma_fit_json(const SurvivalCurve& curve) {
    ordered_json j;
    j["schema"] = 1;
    j["c1_hat"] = curve.c1_hat;
    j["c_hat"] = curve.c_hat;
    j["r_squared"] = curve.r_squared;
    j["y"] = curve.y;
    j["replicas"] = curve.replicas;
    return j.dump();
}

struct SelectionStage {
    SelectionParams params;
    SelectionResult oben;
    SelectionResult bset;
    SelectionResult final;
    double x_star = 0.0;
};

// The combined selection feeds delta/2 to both component selections and
// intersects them.
SelectionStage build_selection(const ExperimentConfig& cfg, const MeanSeries& series,
                               double c1_hat) {
    SelectionStage st;
    st.x_star = estimate_x_star(series);
    st.params.delta = cfg.delta / 2.0;
    st.params.grid_l = series.grid_l;
    st.params.eta = series.eta;
    st.params.x_star = st.x_star;
    st.params.c1 = c1_hat;
    st.oben = select_oben(series, st.params);
    st.bset = build_b_set(series, st.params);
    st.final = intersect(st.oben, st.bset);
    return st;
}

void write_selection_artifacts(const ExperimentConfig& cfg, const SelectionStage& st) {
    write_text_file(join_path(cfg.output_dir, "oben.json"), st.oben.to_json_string() + "\n");
    write_text_file(join_path(cfg.output_dir, "b_set.json"), st.bset.to_json_string() + "\n");
    write_text_file(join_path(cfg.output_dir, "selection.json"),
                    st.final.to_json_string() + "\n");
    write_text_file(join_path(cfg.output_dir, "selection.csv"), st.final.to_csv());
}

MeanSeries handcrafted_rough_series() {
    MeanSeries s;
    s.grid_l = 1;
    s.eta = 0.0;
    s.mode = EnvMode::Quenched;
    s.replicas = 2;
    double m = 0.0;
    for (int i = 0; i < 25; ++i) {
        s.grid.push_back(static_cast<double>(i));
        s.mean.push_back(m);
        s.sem.push_back(0.01);
        const bool jump = i == 4 || i == 10 || i == 11 || i == 18;
        m += jump ? 12.0 : 1.3;
    }
    return s;
}

using CheckResult = std::pair<bool, ordered_json>;

CheckResult check_c_formula(const ExperimentConfig& cfg) {
    EnvSampler quenched{EnvMode::Quenched, cfg.environment};
    const Environment env(cfg.environment);
    const double xi0 = env.rate_at(0);
    const double expected = closed_form_c(xi0, cfg.sim.grid_l);
    const BranchFrequencies freq = estimate_branch_frequencies(
        quenched, cfg.sim, cfg.replicas.verify, cfg.estimate_seed, cfg.policy);
    const double band =
        3.0 * std::sqrt(expected * (1.0 - expected) / static_cast<double>(cfg.replicas.verify));
    ordered_json d;
    d["xi0"] = xi0;
    return {std::fabs(freq.split_first - expected) <= band,
            ordered_json{{"observed", freq.split_first},
                         {"expected", expected},
                         {"band", band},
                         {"details", d}}};
}

CheckResult check_geometric_pop(const ExperimentConfig& cfg) {
    const double t = 4.0;
    EnvSampler env{EnvMode::Quenched, EnvironmentSpec::constant(cfg.environment.ei())};
    SimConfig sim = cfg.sim;
    sim.horizon = t;
    const PopulationStats pops =
        estimate_population(env, sim, cfg.replicas.verify, cfg.estimate_seed, cfg.policy);
    const double p = std::exp(-cfg.environment.ei() * t);
    const double expected = 1.0 / p;
    const double gof = geometric_gof_pvalue(pops.counts, p);
    const bool pass = std::fabs(pops.mean - expected) <= 3.0 * pops.sem && gof > 0.01;
    ordered_json d;
    d["gof_p"] = gof;
    d["t"] = t;
    return {pass,
            ordered_json{{"observed", pops.mean},
                         {"expected", expected},
                         {"band", 3.0 * pops.sem},
                         {"details", d}}};
}

CheckResult check_dh_identity(const ExperimentConfig& cfg) {
    EnvSampler quenched{EnvMode::Quenched, cfg.environment};
    const double t = std::min(5.0, cfg.sim.horizon);
    const auto n = cfg.replicas.verify;
    const auto a = sample_split_first_max(quenched, cfg.sim, t, n, cfg.estimate_seed, cfg.policy);
    const auto b = sample_max_of_two(quenched, cfg.sim, t, n, cfg.estimate_seed, cfg.policy);
    const KsResult ks = ks_two_sample(a, b);
    ordered_json d;
    d["statistic"] = ks.statistic;
    d["t"] = t;
    d["samples_per_side"] = n;
    return {ks.p_value > 0.01,
            ordered_json{{"observed", ks.p_value}, {"expected", ">0.01"}, {"band", 0.01},
                         {"details", d}}};
}

CheckResult check_monotone_mean(const ExperimentConfig& cfg) {
    EstimateOptions opt;
    opt.env = EnvSampler{EnvMode::Quenched, cfg.environment};
    opt.sim = cfg.sim;
    opt.replicas = cfg.replicas.estimate;
    opt.seed = cfg.estimate_seed;
    opt.policy = cfg.policy;
    const MeanSeries s = estimate_mean_series(opt);
    double worst = 0.0;
    bool pass = true;
    for (std::size_t i = 0; i + 1 < s.grid.size(); ++i) {
        const double inc = s.mean[i + 1] - s.mean[i];
        const double band = 2.0 * std::hypot(s.sem[i], s.sem[i + 1]);
        worst = std::min(worst, inc + band);
        if (inc < -band) pass = false;
    }
    return {pass, ordered_json{{"observed", worst},
                               {"expected", ">=0"},
                               {"band", 0.0},
                               {"details", ordered_json{{"replicas", s.replicas}}}}};
}

CheckResult check_sigma_tail(const ExperimentConfig& cfg) {
    EnvSampler quenched{EnvMode::Quenched, cfg.environment};
    const SurvivalCurve curve = estimate_sigma_tail(quenched, cfg.sigma_y, tail_z_grid(cfg),
                                                    cfg.replicas.tail, cfg.estimate_seed,
                                                    cfg.policy);
    const bool pass = curve.c1_hat > 0.0 && curve.r_squared >= 0.9;
    ordered_json d;
    d["c1_hat"] = curve.c1_hat;
    d["r_squared"] = curve.r_squared;
    return {pass, ordered_json{{"observed", curve.c1_hat},
                               {"expected", ">0 with R^2>=0.9"},
                               {"band", 0.0},
                               {"details", d}}};
}

CheckResult check_main_inequality(const ExperimentConfig& cfg) {
    bool pass = true;
    double worst = std::numeric_limits<double>::infinity();
    ordered_json rows = ordered_json::array();
    for (double t : inequality_times(cfg)) {
        const InequalityReport rep = verify_main_inequality(
            cfg.sampler(), cfg.sim, t, cfg.replicas.verify, cfg.estimate_seed, cfg.policy);
        if (rep.slack < -3.0 * rep.slack_sem) pass = false;
        worst = std::min(worst, rep.slack);
        rows.push_back(ordered_json{{"t", rep.t},
                                    {"lhs", rep.lhs},
                                    {"rhs", rep.rhs},
                                    {"slack", rep.slack},
                                    {"stderr", rep.slack_sem}});
    }
    return {pass, ordered_json{{"observed", worst},
                               {"expected", ">= -3*stderr"},
                               {"band", 0.0},
                               {"details", rows}}};
}

CheckResult check_first_jump_split(const ExperimentConfig& cfg) {
    const double t = std::min(4.0, cfg.sim.horizon);
    const FirstJumpReport rep = verify_first_jump_split(cfg.sampler(), cfg.sim, t,
                                                        cfg.replicas.verify, cfg.estimate_seed,
                                                        cfg.policy);
    const bool pass = std::fabs(rep.diff) <= 3.0 * rep.diff_sem &&
                      std::fabs(rep.cutoff_term) <= 3.0 * rep.cutoff_sem;
    ordered_json d;
    d["diff"] = rep.diff;
    d["diff_stderr"] = rep.diff_sem;
    d["cutoff_term"] = rep.cutoff_term;
    d["cutoff_stderr"] = rep.cutoff_sem;
    return {pass, ordered_json{{"observed", rep.diff},
                               {"expected", 0.0},
                               {"band", 3.0 * rep.diff_sem},
                               {"details", d}}};
}

CheckResult check_counting_inequality(const ExperimentConfig& cfg) {
    const MeanSeries s = handcrafted_rough_series();
    SelectionParams params;
    params.delta = cfg.delta;
    params.grid_l = s.grid_l;
    params.eta = s.eta;
    params.x_star = 1.5;
    params.c1 = 0.8;
    bool pass = true;
    for (int j = 1; j <= 5; ++j) {
        const SelectionResult sel = select_fixed_j(s, j, params);
        const auto ktilde = counting_reference(s, j, params);
        for (std::size_t n = 0; n < sel.k_n.size(); ++n) {
            if (sel.k_n[n] > static_cast<std::uint64_t>(j) * ktilde[n] +
                                 static_cast<std::uint64_t>(j))
                pass = false;
        }
    }
    return {pass, ordered_json{{"observed", pass ? "holds" : "violated"},
                               {"expected", "K_n <= j*Ktilde_n + j"},
                               {"band", 0.0}}};
}

CheckResult check_decomposition(const ExperimentConfig& cfg) {
    const double t = std::min(6.0, cfg.sim.horizon);
    const DecompositionReport rep = verify_decomposition(
        cfg.sampler(), cfg.sim, t, cfg.replicas.verify, cfg.diagnose_seed, cfg.sigma_y,
        cfg.policy);
    bool pass = rep.lhs <= rep.rhs + 3.0 * rep.lhs_sem;
    for (std::size_t k = 0; k < rep.bin_term.size(); ++k)
        if (rep.bin_term[k] < -3.0 * rep.bin_term_sem[k]) pass = false;
    ordered_json d;
    d["lhs"] = rep.lhs;
    d["rhs"] = rep.rhs;
    d["stderr"] = rep.lhs_sem;
    d["t"] = t;
    return {pass, ordered_json{{"observed", rep.lhs},
                               {"expected", rep.rhs},
                               {"band", 3.0 * rep.lhs_sem},
                               {"details", d}}};
}

}  // namespace

void ExperimentConfig::validate() const {
    environment.validate();
    sim.validate();
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("config: delta must lie in (0,1)");
    if (estimate_seed == diagnose_seed)
        throw std::invalid_argument("config: estimate_seed must differ from diagnose_seed");
    if (sigma_y != 1 && sigma_y != -1)
        throw std::invalid_argument("config: sigma_y must be +-1");
    if (!(z_max >= 1.0)) throw std::invalid_argument("config: z_max must be >= 1");
    if (replicas.estimate < 2 || replicas.diagnose < 100)
        throw std::invalid_argument("config: too few replicas");
}

EnvSampler ExperimentConfig::sampler() const { return EnvSampler{mode, environment}; }

std::string ExperimentConfig::to_json_string() const {
    ordered_json j = default_config_json();
    j["environment"]["family"] = family_name(environment.family);
    j["environment"]["lo"] = environment.lo;
    j["environment"]["hi"] = environment.hi;
    j["environment"]["p_lo"] = environment.p_lo;
    j["sim"]["x0"] = sim.x0;
    j["sim"]["T"] = sim.horizon;
    j["sim"]["L"] = sim.grid_l;
    j["sim"]["eta"] = sim.grid_eta;
    j["sim"]["population_cap"] = sim.population_cap;
    j["replicas"]["simulate"] = replicas.simulate;
    j["replicas"]["estimate"] = replicas.estimate;
    j["replicas"]["tail"] = replicas.tail;
    j["replicas"]["diagnose"] = replicas.diagnose;
    j["replicas"]["verify"] = replicas.verify;
    j["delta"] = delta;
    j["seeds"]["env_seed"] = env_seed;
    j["seeds"]["estimate_seed"] = estimate_seed;
    j["seeds"]["diagnose_seed"] = diagnose_seed;
    j["mode"] = mode_name(mode);
    j["tightness_multiplier"] = tightness_multiplier;
    j["sigma_y"] = sigma_y;
    j["z_max"] = z_max;
    j["output_dir"] = output_dir;
    return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::paper_regime() {
    ExperimentConfig cfg = parse_config(default_config_json());
    cfg.output_dir = "out";
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    ordered_json doc = default_config_json();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("config: cannot open " + path);
        json file_doc = json::parse(in);
        deep_merge(doc, file_doc);
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: --set expects key=value, got " + ov);
        const std::string key = ov.substr(0, eq);
        const std::string raw = ov.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;  // bare strings are fine
        }
        ordered_json* node = &doc;
        std::size_t pos = 0;
        for (;;) {
            const auto dot = key.find('.', pos);
            const std::string part = key.substr(pos, dot - pos);
            if (dot == std::string::npos) {
                (*node)[part] = value;
                break;
            }
            node = &(*node)[part];
            pos = dot + 1;
        }
    }
    ExperimentConfig cfg = parse_config(doc);
    if (cfg.output_dir.empty()) {
        const char* env_dir = std::getenv("BRWRE_OUT_DIR");
        cfg.output_dir = env_dir && *env_dir ? env_dir : "out";
    }
    cfg.validate();
    return cfg;
}

void write_text_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SelectionResult selection_from_json(const std::string& text, const std::vector<double>& grid) {
    const json j = json::parse(text);
    SelectionResult res;
    res.kind = SelectionKind::FinalIntersection;
    res.grid = grid;
    res.selected_mask.assign(grid.size(), 0);
    res.censored_mask.assign(grid.size(), 0);
    res.predicate.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    res.threshold.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    const auto& p = j.at("params");
    res.params.delta = p.at("delta").get<double>();
    res.params.grid_l = p.at("L").get<int>();
    res.params.eta = p.at("eta").get<double>();
    res.params.x_star = p.at("x_star").get<double>();
    res.params.c1 = p.at("c1").get<double>();
    for (double t : j.at("selected").get<std::vector<double>>()) {
        const auto i = static_cast<std::size_t>(std::llround((t - res.params.eta) *
                                                             res.params.grid_l));
        if (i >= grid.size() || std::fabs(grid[i] - t) > 1e-9)
            throw std::invalid_argument("selection json: time off the grid");
        res.selected_mask[i] = 1;
    }
    std::uint64_t excluded = 0;
    res.k_n.resize(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (!res.selected_mask[n]) ++excluded;
        res.k_n[n] = excluded;
    }
    return res;
}

int cmd_simulate(const ExperimentConfig& cfg) {
    std::vector<std::string> lines(cfg.replicas.simulate);
    try {
        for_each_replica(cfg.replicas.simulate, cfg.policy, [&](std::uint64_t r) {
            const Environment env = cfg.sampler().for_replica(Stage::Simulate, r);
            auto rng = make_replica_rng(cfg.estimate_seed, Stage::Simulate, r, 0);
            const TrajectoryRecord rec = run(cfg.sim, env, rng);
            lines[r] = trajectory_to_jsonl(rec, r);
        });
    } catch (const ReplicaFailure& e) {
        ordered_json err;
        err["error"] = "population_cap_exceeded";
        err["replica"] = e.replica_index;
        err["message"] = e.what();
        std::cout << err.dump() << "\n";
        return kExitRuntimeError;
    }
    std::string body;
    for (const auto& l : lines) body += l + "\n";
    write_text_file(join_path(cfg.output_dir, "records.jsonl"), body);
    return kExitPass;
}

int cmd_estimate_means(const ExperimentConfig& cfg) {
    const MeanSeries series = pipeline_series(cfg);
    write_text_file(join_path(cfg.output_dir, "means.csv"), series.to_csv());
    ordered_json meta;
    meta["schema"] = 1;
    meta["mode"] = mode_name(series.mode);
    meta["replicas"] = series.replicas;
    meta["L"] = series.grid_l;
    meta["eta"] = series.eta;
    write_text_file(join_path(cfg.output_dir, "means_meta.json"), meta.dump() + "\n");
    return kExitPass;
}

int cmd_sigma_tail(const ExperimentConfig& cfg) {
    const SurvivalCurve curve = pipeline_tail(cfg);
    write_text_file(join_path(cfg.output_dir, "sigma_tail.csv"), curve.to_csv());
    write_text_file(join_path(cfg.output_dir, "sigma_fit.json"), sigma_fit_json(curve) + "\n");
    return curve.c1_hat > 0.0 ? kExitPass : kExitCheckFailed;
}

int cmd_select(const ExperimentConfig& cfg) {
    const MeanSeries series =
        MeanSeries::from_csv(read_text_file(join_path(cfg.output_dir, "means.csv")));
    const json fit = json::parse(read_text_file(join_path(cfg.output_dir, "sigma_fit.json")));
    const SelectionStage st = build_selection(cfg, series, fit.at("c1_hat").get<double>());
    write_selection_artifacts(cfg, st);
    return kExitPass;
}

int cmd_tightness(const ExperimentConfig& cfg) {
    const MeanSeries series =
        MeanSeries::from_csv(read_text_file(join_path(cfg.output_dir, "means.csv")));
    const SelectionResult sel = selection_from_json(
        read_text_file(join_path(cfg.output_dir, "selection.json")), series.grid);
    const TightnessReport rep = tightness_report(cfg.sampler(), sel, series,
                                                 cfg.replicas.diagnose, cfg.diagnose_seed,
                                                 cfg.policy, cfg.sim);
    write_text_file(join_path(cfg.output_dir, "tightness.csv"), rep.to_csv());
    write_text_file(join_path(cfg.output_dir, "tightness_summary.json"),
                    rep.summary_json() + "\n");
    const bool pass =
        rep.max_spread_selected() <= cfg.tightness_multiplier * rep.median_spread_selected() &&
        rep.max_spread_selected() <= rep.max_spread_full();
    return pass ? kExitPass : kExitCheckFailed;
}

int cmd_pipeline(const ExperimentConfig& cfg) {
    write_text_file(join_path(cfg.output_dir, "config_used.json"), cfg.to_json_string());

    // stage 1: mean series (re-read from the CSV so later stages are pure
    // functions of the artifact, not of in-memory extras)
    int rc = cmd_estimate_means(cfg);
    if (rc != kExitPass) return rc;
    const MeanSeries series =
        MeanSeries::from_csv(read_text_file(join_path(cfg.output_dir, "means.csv")));

    // stage 2: hitting-time tail
    rc = cmd_sigma_tail(cfg);
    if (rc != kExitPass) return rc;
    const json fit = json::parse(read_text_file(join_path(cfg.output_dir, "sigma_fit.json")));
    const double c1_hat = fit.at("c1_hat").get<double>();

    // stage 3: selections
    const SelectionStage st = build_selection(cfg, series, c1_hat);
    write_selection_artifacts(cfg, st);
    const DensityReport density = density_report(st.final);

    // stage 4: tightness diagnostics on fresh replicas
    const TightnessReport tight = tightness_report(cfg.sampler(), st.final, series,
                                                   cfg.replicas.diagnose, cfg.diagnose_seed,
                                                   cfg.policy, cfg.sim);
    write_text_file(join_path(cfg.output_dir, "tightness.csv"), tight.to_csv());
    write_text_file(join_path(cfg.output_dir, "tightness_summary.json"),
                    tight.summary_json() + "\n");

    // stage 5: inequality report at three interior grid times
    ordered_json ineq_rows = ordered_json::array();
    bool ineq_pass = true;
    for (double t : inequality_times(cfg)) {
        const InequalityReport rep = verify_main_inequality(
            cfg.sampler(), cfg.sim, t, cfg.replicas.verify, cfg.estimate_seed, cfg.policy);
        if (rep.slack < -3.0 * rep.slack_sem) ineq_pass = false;
        ineq_rows.push_back(ordered_json{{"t", rep.t},
                                         {"lhs", rep.lhs},
                                         {"rhs", rep.rhs},
                                         {"slack", rep.slack},
                                         {"stderr", rep.slack_sem}});
    }

    const double density_bound =
        (1.0 + cfg.delta) / cfg.sim.grid_l + 0.1 / cfg.sim.grid_l;
    const bool density_pass = density.tail_max <= density_bound;
    const bool tight_pass =
        tight.max_spread_selected() <= cfg.tightness_multiplier * tight.median_spread_selected() &&
        tight.max_spread_selected() <= tight.max_spread_full();
    const bool pass = density_pass && tight_pass && ineq_pass;

    ordered_json summary;
    summary["schema"] = 1;
    summary["mode"] = mode_name(cfg.mode);
    summary["x_star_hat"] = st.x_star;
    summary["c1_hat"] = c1_hat;
    summary["selected_count"] = st.final.selected_count();
    summary["grid_size"] = series.grid.size();
    summary["density_tail_max"] = density.tail_max;
    summary["density_bound"] = density_bound;
    summary["density_pass"] = density_pass;
    summary["density_bound_applicable"] = st.params.density_bound_applicable();
    summary["tightness"] = ordered_json{
        {"max_spread_selected", tight.max_spread_selected()},
        {"median_spread_selected", tight.median_spread_selected()},
        {"max_spread_full", tight.max_spread_full()},
        {"multiplier", cfg.tightness_multiplier},
        {"pass", tight_pass}};
    summary["main_inequality"] = ineq_rows;
    summary["main_inequality_pass"] = ineq_pass;
    summary["pass"] = pass;
    write_text_file(join_path(cfg.output_dir, "summary.json"), summary.dump(2) + "\n");
    return pass ? kExitPass : kExitCheckFailed;
}

std::vector<std::string> verify_check_names() {
    return {"c_formula",       "geometric_pop",  "dh_identity",
            "monotone_mean",   "sigma_tail",     "main_inequality",
            "first_jump_split", "counting_inequality", "decomposition"};
}

int cmd_verify(const ExperimentConfig& cfg, const std::string& check) {
    CheckResult res;
    if (check == "c_formula") res = check_c_formula(cfg);
    else if (check == "geometric_pop") res = check_geometric_pop(cfg);
    else if (check == "dh_identity") res = check_dh_identity(cfg);
    else if (check == "monotone_mean") res = check_monotone_mean(cfg);
    else if (check == "sigma_tail") res = check_sigma_tail(cfg);
    else if (check == "main_inequality") res = check_main_inequality(cfg);
    else if (check == "first_jump_split") res = check_first_jump_split(cfg);
    else if (check == "counting_inequality") res = check_counting_inequality(cfg);
    else if (check == "decomposition") res = check_decomposition(cfg);
    else {
        std::cerr << "unknown check: " << check << "\n";
        return kExitConfigError;
    }
    ordered_json out;
    out["schema"] = 1;
    out["check"] = check;
    out["pass"] = res.first;
    deep_merge(out, res.second);
    std::cout << out.dump() << "\n";
    write_text_file(join_path(cfg.output_dir, "verify_" + check + ".json"), out.dump() + "\n");
    return res.first ? kExitPass : kExitCheckFailed;
}

}  // namespace brwre

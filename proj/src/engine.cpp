#include "brwre/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace brwre {

std::vector<double> grid_times(int grid_l, double eta, double horizon) {
    std::vector<double> g;
    if (horizon < eta) return g;
    const auto n_max = static_cast<long long>(std::floor((horizon - eta) * grid_l + 1e-9));
    g.reserve(static_cast<std::size_t>(n_max) + 1);
    for (long long n = 0; n <= n_max; ++n)
        g.push_back(eta + static_cast<double>(n) / grid_l);
    return g;
}

void SimConfig::validate() const {
    if (!(horizon >= 0.0)) throw std::invalid_argument("sim: horizon must be >= 0");
    if (grid_l < 1) throw std::invalid_argument("sim: L must be >= 1");
    if (!(grid_eta >= 0.0 && grid_eta < 1.0 / grid_l))
        throw std::invalid_argument("sim: eta must lie in [0, 1/L)");
    if (population_cap < 1) throw std::invalid_argument("sim: population_cap must be >= 1");
}

std::int64_t ParticleSystem::max_site() const {
    std::int64_t m = sites.front();
    for (std::int64_t x : sites) m = std::max(m, x);
    return m;
}

std::string branch_name(Branch b) {
    switch (b) {
        case Branch::SplitFirst: return "split_first";
        case Branch::MoveFirst: return "move_first";
        case Branch::CutoffFirst: return "cutoff_first";
    }
    return "?";
}

namespace {

// Thinning proposal against the per-particle majorant rate 1 + es. One
// uniform decides accept/kind: u in [0,1) -> move, [1,1+xi) -> split,
// [1+xi, 1+es) -> rejected proposal. Between accepted events the state is
// frozen, so the accepted stream is exactly the Expo(sum(1+xi)) race.
Event propose_accepted(const ParticleSystem& sys, const Environment& env, double maj,
                       Xoshiro256ss& rng) {
    const auto n = sys.sites.size();
    double t = sys.now;
    for (;;) {
        t += rng.exponential(static_cast<double>(n) * maj);
        const auto idx = static_cast<std::uint32_t>(rng.uniform_index(n));
        const double xi = env.rate_at(sys.sites[idx]);
        const double u = rng.uniform01() * maj;
        if (u >= 1.0 + xi) continue;
        Event ev;
        ev.time = t;
        ev.particle = idx;
        if (u < 1.0) {
            ev.kind = EventKind::Move;
            ev.dir = rng.coin() ? std::int8_t{1} : std::int8_t{-1};
        } else {
            ev.kind = EventKind::Split;
            ev.dir = 0;
        }
        return ev;
    }
}

struct EventLoop {
    const SimConfig& cfg;
    const Environment& env;
    Xoshiro256ss& rng;
    double maj;  // 1 + es

    ParticleSystem sys;

    std::optional<double> first_split, first_move, first_event;
    std::int8_t first_move_dir = 0;
    std::optional<double> sigma;

    std::vector<double> grid;
    std::size_t gcur = 0;
    std::vector<std::int64_t> m_values;

    bool stop_at_hit = false;
    bool stopped = false;

    bool track_subtree = false;
    bool subtree_active = false;
    double sigma_abs = 0.0;
    std::vector<std::uint8_t> tagged;
    std::vector<double> emb_grid;
    std::size_t ecur = 0;
    std::vector<std::int64_t> emb_values;
    std::optional<double> emb_first_split, emb_first_move;

    std::optional<std::uint32_t> chain;  // uniform-descendant tag

    std::vector<Event> event_log;

    EventLoop(const SimConfig& c, const Environment& e, Xoshiro256ss& r)
        : cfg(c), env(e), rng(r), maj(1.0 + e.es()) {
        sys.sites.push_back(cfg.x0);
        if (cfg.x0 == 0) sigma = 0.0;
        if (cfg.sample_grid) grid = grid_times(cfg.grid_l, cfg.grid_eta, cfg.horizon);
    }

    std::int64_t subtree_max() const {
        std::int64_t m = std::numeric_limits<std::int64_t>::min();
        for (std::size_t i = 0; i < sys.sites.size(); ++i)
            if (tagged[i]) m = std::max(m, sys.sites[i]);
        return m;
    }

    // Emits grid samples for all sample times strictly before t. The state is
    // whatever it is now; callers invoke this before applying an event at t.
    void emit_until(double t) {
        while (gcur < grid.size() && grid[gcur] < t) {
            m_values.push_back(sys.max_site());
            ++gcur;
        }
        if (subtree_active) {
            while (ecur < emb_grid.size() && sigma_abs + emb_grid[ecur] < t) {
                emb_values.push_back(subtree_max());
                ++ecur;
            }
        }
    }

    void emit_rest() {
        emit_until(std::numeric_limits<double>::infinity());
    }

    TrajectoryRecord make_record() const {
        TrajectoryRecord rec;
        rec.grid.assign(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(gcur));
        rec.max_on_grid = m_values;
        rec.tau_s = first_split;
        rec.tau_m = first_move;
        const double fe = first_event ? *first_event : std::numeric_limits<double>::infinity();
        rec.tau = std::min(fe, cfg.cutoff());
        rec.sigma = sigma;
        rec.final_population = sys.sites.size();
        rec.final_max = sys.max_site();
        rec.events = event_log;
        return rec;
    }

    void apply(const Event& ev) {
        sys.now = ev.time;
        if (!first_event) first_event = ev.time;
        const bool was_tagged = subtree_active && tagged[ev.particle];
        if (ev.kind == EventKind::Move) {
            if (!first_move) {
                first_move = ev.time;
                first_move_dir = ev.dir;
            }
            if (was_tagged && !emb_first_move) emb_first_move = ev.time - sigma_abs;
            sys.sites[ev.particle] += ev.dir;
            if (!sigma && sys.sites[ev.particle] == 0) {
                sigma = ev.time;
                if (track_subtree) {
                    subtree_active = true;
                    sigma_abs = ev.time;
                    tagged.assign(sys.sites.size(), 0);
                    tagged[ev.particle] = 1;
                    emb_grid = grid_times(cfg.grid_l, cfg.grid_eta, cfg.horizon - ev.time);
                }
                if (stop_at_hit) stopped = true;
            }
        } else {
            if (!first_split) first_split = ev.time;
            if (was_tagged && !emb_first_split) emb_first_split = ev.time - sigma_abs;
            if (sys.sites.size() >= cfg.population_cap) {
                throw PopulationCapExceeded(
                    "population cap " + std::to_string(cfg.population_cap) +
                        " exceeded at time " + std::to_string(ev.time),
                    make_record());
            }
            sys.sites.push_back(sys.sites[ev.particle]);
            sys.births += 1;
            if (subtree_active) tagged.push_back(tagged[ev.particle]);
            if (chain && ev.particle == *chain && rng.coin())
                chain = static_cast<std::uint32_t>(sys.sites.size() - 1);
        }
        if (cfg.record_events) event_log.push_back(ev);
    }

    // One accepted event at or before `limit`; false when the proposal clock
    // passes the limit first (state is then valid at `limit`).
    bool step(double limit) {
        const auto n = sys.sites.size();
        double t = sys.now;
        for (;;) {
            t += rng.exponential(static_cast<double>(n) * maj);
            if (t > limit) {
                sys.now = limit;
                return false;
            }
            const auto idx = static_cast<std::uint32_t>(rng.uniform_index(n));
            const double xi = env.rate_at(sys.sites[idx]);
            const double u = rng.uniform01() * maj;
            if (u >= 1.0 + xi) continue;
            emit_until(t);
            Event ev;
            ev.time = t;
            ev.particle = idx;
            if (u < 1.0) {
                ev.kind = EventKind::Move;
                ev.dir = rng.coin() ? std::int8_t{1} : std::int8_t{-1};
            } else {
                ev.kind = EventKind::Split;
            }
            apply(ev);
            return true;
        }
    }

    void run_until(double limit) {
        while (step(limit)) {
            if (stopped) return;
        }
        emit_rest();
    }

    // When no event landed inside the horizon, the first-event time is still
    // needed to pin tau = min(tau_s, tau_m, 1/L); by memorylessness we may
    // draw it from the frozen state without applying it.
    void pin_first_event() {
        if (first_event) return;
        first_event = propose_accepted(sys, env, rng).time;
    }
};

}  // namespace

Event next_event(const ParticleSystem& system, const Environment& env, Xoshiro256ss& rng) {
    return propose_accepted(system, env, 1.0 + env.es(), rng);
}

void apply_event(ParticleSystem& system, const Event& ev) {
    system.now = ev.time;
    if (ev.kind == EventKind::Move) {
        system.sites[ev.particle] += ev.dir;
    } else {
        system.sites.push_back(system.sites[ev.particle]);
        system.births += 1;
    }
}

TrajectoryRecord run(const SimConfig& config, const Environment& env, Xoshiro256ss& rng) {
    config.validate();
    EventLoop loop(config, env, rng);
    loop.run_until(config.horizon);
    loop.pin_first_event();
    return loop.make_record();
}

DekkingHostRun run_dekking_host_branch(const SimConfig& config, const Environment& env,
                                       Xoshiro256ss& rng, std::optional<Branch> only_if) {
    config.validate();
    SimConfig cfg = config;
    cfg.sample_grid = false;
    EventLoop loop(cfg, env, rng);

    const Event first = propose_accepted(loop.sys, env, loop.maj, rng);
    const double cutoff = cfg.cutoff();
    DekkingHostRun out;
    out.tau = std::min(first.time, cutoff);
    if (first.time < cutoff) {
        out.branch = first.kind == EventKind::Split ? Branch::SplitFirst : Branch::MoveFirst;
        if (out.branch == Branch::MoveFirst) out.s1 = first.dir;
    } else {
        out.branch = Branch::CutoffFirst;
    }
    if (only_if && out.branch != *only_if) return out;

    const double total = out.tau + cfg.horizon;
    if (first.time <= total) {
        loop.apply(first);
        loop.run_until(total);
    } else {
        loop.sys.now = total;
    }
    out.final_max = loop.sys.max_site();
    return out;
}

HittingRun run_hitting(const SimConfig& config, const Environment& env, Xoshiro256ss& rng,
                       HitMode mode) {
    config.validate();
    if (config.x0 != 1 && config.x0 != -1)
        throw std::invalid_argument("run_hitting: start site must be +1 or -1");
    EventLoop loop(config, env, rng);
    loop.stop_at_hit = (mode == HitMode::StopAtHit);
    loop.track_subtree = (mode == HitMode::FullCoupling);
    loop.run_until(config.horizon);
    loop.pin_first_event();

    HittingRun out;
    out.sigma = loop.sigma;
    out.full = loop.make_record();
    if (loop.subtree_active) {
        TrajectoryRecord emb;
        emb.grid.assign(loop.emb_grid.begin(),
                        loop.emb_grid.begin() + static_cast<std::ptrdiff_t>(loop.ecur));
        emb.max_on_grid = loop.emb_values;
        emb.tau_s = loop.emb_first_split;
        emb.tau_m = loop.emb_first_move;
        const double inf = std::numeric_limits<double>::infinity();
        emb.tau = std::min({loop.emb_first_split.value_or(inf),
                            loop.emb_first_move.value_or(inf), config.cutoff()});
        emb.sigma = 0.0;
        emb.final_max = loop.subtree_max();
        std::uint64_t n = 0;
        for (auto f : loop.tagged) n += f;
        emb.final_population = n;
        out.embedded = std::move(emb);
    }
    return out;
}

std::int64_t track_uniform_descendant(const SimConfig& config, const Environment& env, double s,
                                      Xoshiro256ss& rng) {
    config.validate();
    if (!(s >= 0.0)) throw std::invalid_argument("track_uniform_descendant: s must be >= 0");
    SimConfig cfg = config;
    cfg.sample_grid = false;
    EventLoop loop(cfg, env, rng);
    loop.run_until(cfg.horizon);

    // maximal particle, smallest index on ties
    std::uint32_t v = 0;
    for (std::uint32_t i = 1; i < loop.sys.sites.size(); ++i)
        if (loop.sys.sites[i] > loop.sys.sites[v]) v = i;
    const std::int64_t base = loop.sys.sites[v];

    loop.chain = v;
    loop.run_until(cfg.horizon + s);
    return loop.sys.sites[*loop.chain] - base;
}

std::string trajectory_to_jsonl(const TrajectoryRecord& rec, std::uint64_t replica) {
    nlohmann::ordered_json j;
    j["replica"] = replica;
    j["grid"] = rec.grid;
    j["M"] = rec.max_on_grid;
    j["tau_s"] = rec.tau_s ? nlohmann::ordered_json(*rec.tau_s) : nlohmann::ordered_json(nullptr);
    j["tau_m"] = rec.tau_m ? nlohmann::ordered_json(*rec.tau_m) : nlohmann::ordered_json(nullptr);
    j["tau"] = rec.tau;
    j["sigma"] = rec.sigma ? nlohmann::ordered_json(*rec.sigma) : nlohmann::ordered_json(nullptr);
    j["pop"] = rec.final_population;
    return j.dump();
}

}  // namespace brwre

#pragma once
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwre/environment.hpp"
#include "brwre/rng.hpp"

namespace brwre {

// Time grid {eta + n/L : n = 0,1,...} intersected with [0, T].
std::vector<double> grid_times(int grid_l, double eta, double horizon);

struct SimConfig {
    std::int64_t x0 = 0;
    double horizon = 0.0;  // T
    int grid_l = 1;        // L
    double grid_eta = 0.0; // eta in [0, 1/L)
    std::uint64_t population_cap = 2'000'000;
    bool sample_grid = true;
    bool record_events = false;

    double cutoff() const { return 1.0 / grid_l; }  // 1/L
    void validate() const;
};

enum class EventKind : std::uint8_t { Move, Split };

struct Event {
    double time = 0.0;
    std::uint32_t particle = 0;
    EventKind kind = EventKind::Move;
    std::int8_t dir = 0;  // ±1 for moves
};

// Live state of one replica. Particles never die; splits append.
struct ParticleSystem {
    double now = 0.0;
    std::vector<std::int64_t> sites;
    std::uint64_t births = 0;

    std::int64_t max_site() const;
};

struct TrajectoryRecord {
    std::vector<double> grid;
    std::vector<std::int64_t> max_on_grid;
    std::optional<double> tau_s;   // first split time, when within horizon
    std::optional<double> tau_m;   // first move time, when within horizon
    double tau = 0.0;              // min(tau_s, tau_m, 1/L), always pinned
    std::optional<double> sigma;   // first occupation of site 0
    std::uint64_t final_population = 1;
    std::int64_t final_max = 0;
    std::vector<Event> events;     // populated only when record_events
};

// Horizon would require growing past population_cap. The partial record
// covers everything recorded before the failing split.
class PopulationCapExceeded : public std::runtime_error {
  public:
    PopulationCapExceeded(std::string msg, TrajectoryRecord partial)
        : std::runtime_error(std::move(msg)), partial_record(std::move(partial)) {}
    TrajectoryRecord partial_record;
};

// One exact event of the global race: waiting time ~ Expo(sum_i (1+xi(x_i))),
// particle i with probability (1+xi(x_i))/sum, split with probability
// xi/(1+xi), otherwise a fair ±1 move. Does not mutate the system.
Event next_event(const ParticleSystem& system, const Environment& env, Xoshiro256ss& rng);

void apply_event(ParticleSystem& system, const Event& ev);

TrajectoryRecord run(const SimConfig& config, const Environment& env, Xoshiro256ss& rng);

enum class Branch : std::uint8_t { SplitFirst, MoveFirst, CutoffFirst };

std::string branch_name(Branch b);

struct DekkingHostRun {
    Branch branch = Branch::CutoffFirst;
    double tau = 0.0;               // min(first event, 1/L)
    std::int8_t s1 = 0;             // first-move direction on the move branch
    std::optional<std::int64_t> final_max;  // maximum at time tau + t
};

// Classifies the first-event branch and, unless only_if mismatches, continues
// the system to time tau + config.horizon and reports the maximum there.
DekkingHostRun run_dekking_host_branch(const SimConfig& config, const Environment& env,
                                       Xoshiro256ss& rng,
                                       std::optional<Branch> only_if = std::nullopt);

enum class HitMode { StopAtHit, FullCoupling };

struct HittingRun {
    std::optional<double> sigma;
    TrajectoryRecord full;
    // Subtree of the particle that first reached site 0, recorded on its own
    // clock (time 0 = the hit). Present only in FullCoupling mode with a hit.
    std::optional<TrajectoryRecord> embedded;
};

// Simulation started at x0 = y in {-1,+1}; sigma is the first time any
// particle occupies site 0. In FullCoupling mode the hitting particle's
// subtree is tracked so the pathwise bound full max >= embedded max holds on
// every replica.
HittingRun run_hitting(const SimConfig& config, const Environment& env, Xoshiro256ss& rng,
                       HitMode mode);

// Runs to time t = config.horizon, picks a maximal particle (smallest index on
// ties), then follows the chain that picks a uniformly random child at each
// split until time t + s. Returns the chain's displacement over [t, t+s].
std::int64_t track_uniform_descendant(const SimConfig& config, const Environment& env, double s,
                                      Xoshiro256ss& rng);

std::string trajectory_to_jsonl(const TrajectoryRecord& rec, std::uint64_t replica);

}  // namespace brwre

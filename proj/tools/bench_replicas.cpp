// Benchmark of the replica kernel: serial reference vs the OpenMP path on the
// same workload, with a bit-identity check on the results.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include <CLI11.hpp>

#include "brwre/stats.hpp"

using clock_type = std::chrono::steady_clock;

namespace {

double timed_series(const brwre::EstimateOptions& opt, brwre::MeanSeries& out) {
    const auto t0 = clock_type::now();
    out = brwre::estimate_mean_series(opt);
    const auto t1 = clock_type::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP replica-kernel benchmark"};
    std::uint64_t replicas = 2000;
    double horizon = 8.0;
    std::uint64_t seed = 4242;
    app.add_option("--replicas", replicas);
    app.add_option("--t", horizon);
    app.add_option("--seed", seed);
    CLI11_PARSE(app, argc, argv);

    brwre::EstimateOptions opt;
    opt.env.mode = brwre::EnvMode::Annealed;
    opt.env.spec = brwre::EnvironmentSpec::two_point(0.5, 1.5, 0.5, seed);
    opt.sim.horizon = horizon;
    opt.replicas = replicas;
    opt.seed = seed;
    opt.stage = brwre::Stage::Bench;

    brwre::MeanSeries serial_out, parallel_out;
    opt.policy = brwre::ExecutionPolicy::Serial;
    const double t_serial = timed_series(opt, serial_out);
    opt.policy = brwre::ExecutionPolicy::OpenMP;
    const double t_parallel = timed_series(opt, parallel_out);

    const bool identical =
        serial_out.mean == parallel_out.mean && serial_out.sem == parallel_out.sem;
    std::printf("replicas=%llu T=%.3g\n", static_cast<unsigned long long>(replicas), horizon);
    std::printf("serial    %8.3f s\n", t_serial);
    std::printf("openmp    %8.3f s  (%.2fx)\n", t_parallel,
                t_parallel > 0 ? t_serial / t_parallel : 0.0);
    std::printf("bit-identical results: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}

#pragma once
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace brwre {

// Replica loops are the data-parallel kernel of every estimator. The serial
// policy is the reference implementation; the OpenMP policy must produce
// bit-identical results because each replica owns a counter-derived RNG
// stream and writes only to its own output slot.
enum class ExecutionPolicy { Serial, OpenMP };

inline bool openmp_compiled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

// Raised when a replica fails; carries the smallest failing replica index so
// error reporting is independent of scheduling.
class ReplicaFailure : public std::runtime_error {
  public:
    ReplicaFailure(std::uint64_t replica, const std::string& what)
        : std::runtime_error("replica " + std::to_string(replica) + ": " + what),
          replica_index(replica) {}
    std::uint64_t replica_index;
};

template <typename Fn>
void for_each_replica(std::uint64_t n, ExecutionPolicy policy, Fn&& fn) {
    if (policy == ExecutionPolicy::Serial || !openmp_compiled()) {
        for (std::uint64_t r = 0; r < n; ++r) {
            try {
                fn(r);
            } catch (const std::exception& e) {
                throw ReplicaFailure(r, e.what());
            }
        }
        return;
    }
#ifdef _OPENMP
    std::uint64_t bad_index = UINT64_MAX;
    std::string bad_what;
    std::mutex mu;
#pragma omp parallel for schedule(dynamic, 16)
    for (long long r = 0; r < static_cast<long long>(n); ++r) {
        try {
            fn(static_cast<std::uint64_t>(r));
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(mu);
            if (static_cast<std::uint64_t>(r) < bad_index) {
                bad_index = static_cast<std::uint64_t>(r);
                bad_what = e.what();
            }
        }
    }
    if (bad_index != UINT64_MAX) throw ReplicaFailure(bad_index, bad_what);
#endif
}

}  // namespace brwre

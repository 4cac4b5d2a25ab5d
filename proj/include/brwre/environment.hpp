#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>

#include "brwre/rng.hpp"

namespace brwre {

enum class EnvFamily { TwoPoint, Uniform, Constant };

std::string family_name(EnvFamily f);
EnvFamily family_from_name(const std::string& name);

// Law of the i.i.d. split rates on the lattice. `lo`/`hi` are the two levels
// for two_point, the interval bounds for uniform, and lo == hi == r for
// constant.
struct EnvironmentSpec {
    EnvFamily family = EnvFamily::Constant;
    double lo = 1.0;
    double hi = 1.0;
    double p_lo = 0.5;  // mass at `lo`, two_point only
    std::uint64_t seed = 0;

    double ei() const { return lo; }
    double es() const { return hi; }

    // Throws std::invalid_argument when the law is malformed.
    void validate() const;

    static EnvironmentSpec two_point(double lo, double hi, double p_lo, std::uint64_t seed);
    static EnvironmentSpec uniform(double lo, double hi, std::uint64_t seed);
    static EnvironmentSpec constant(double r, std::uint64_t seed = 0);

    std::string to_json_string() const;
    static EnvironmentSpec from_json_string(const std::string& text);
};

// A quenched realization of the rates. The rate at a site is a pure function
// of (seed, site), so the lazily-materialized map never has to be stored:
// any query order, any thread, same value.
class Environment {
  public:
    explicit Environment(EnvironmentSpec spec);

    double rate_at(std::int64_t site) const;
    const EnvironmentSpec& spec() const { return spec_; }
    double ei() const { return spec_.ei(); }
    double es() const { return spec_.es(); }

    // Constant-rate comparison environments at the law's essential bounds.
    std::pair<Environment, Environment> bounding() const;

    // Audit export, one "site,rate" row per site in [lo_site, hi_site].
    void export_window_csv(std::ostream& out, std::int64_t lo_site, std::int64_t hi_site) const;

  private:
    EnvironmentSpec spec_;
};

Environment sample_environment(const EnvironmentSpec& spec);

}  // namespace brwre

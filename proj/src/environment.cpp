#include "brwre/environment.hpp"

#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace brwre {

std::string family_name(EnvFamily f) {
    switch (f) {
        case EnvFamily::TwoPoint: return "two_point";
        case EnvFamily::Uniform: return "uniform";
        case EnvFamily::Constant: return "constant";
    }
    return "?";
}

EnvFamily family_from_name(const std::string& name) {
    if (name == "two_point") return EnvFamily::TwoPoint;
    if (name == "uniform") return EnvFamily::Uniform;
    if (name == "constant") return EnvFamily::Constant;
    throw std::invalid_argument("unknown environment family: " + name);
}

void EnvironmentSpec::validate() const {
    if (!(lo > 0.0)) throw std::invalid_argument("environment: ei must be > 0");
    if (!(lo <= hi)) throw std::invalid_argument("environment: ei must be <= es");
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("environment: rates must be finite");
    if (family == EnvFamily::Constant) {
        if (lo != hi) throw std::invalid_argument("environment: constant family needs lo == hi");
    } else {
        if (!(lo < hi)) throw std::invalid_argument("environment: lo < hi required");
        if (family == EnvFamily::TwoPoint && !(p_lo > 0.0 && p_lo < 1.0))
            throw std::invalid_argument("environment: p_lo must lie in (0,1)");
    }
}

EnvironmentSpec EnvironmentSpec::two_point(double lo, double hi, double p_lo, std::uint64_t seed) {
    EnvironmentSpec s{EnvFamily::TwoPoint, lo, hi, p_lo, seed};
    s.validate();
    return s;
}

EnvironmentSpec EnvironmentSpec::uniform(double lo, double hi, std::uint64_t seed) {
    EnvironmentSpec s{EnvFamily::Uniform, lo, hi, 0.5, seed};
    s.validate();
    return s;
}

EnvironmentSpec EnvironmentSpec::constant(double r, std::uint64_t seed) {
    EnvironmentSpec s{EnvFamily::Constant, r, r, 0.5, seed};
    s.validate();
    return s;
}

std::string EnvironmentSpec::to_json_string() const {
    nlohmann::ordered_json j;
    j["family"] = family_name(family);
    j["lo"] = lo;
    j["hi"] = hi;
    if (family == EnvFamily::TwoPoint) j["p_lo"] = p_lo;
    j["seed"] = seed;
    return j.dump();
}

EnvironmentSpec EnvironmentSpec::from_json_string(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    EnvironmentSpec s;
    s.family = family_from_name(j.at("family").get<std::string>());
    s.lo = j.at("lo").get<double>();
    s.hi = j.contains("hi") && !j["hi"].is_null() ? j["hi"].get<double>() : s.lo;
    if (j.contains("p_lo") && !j["p_lo"].is_null()) s.p_lo = j["p_lo"].get<double>();
    if (j.contains("seed") && !j["seed"].is_null()) s.seed = j["seed"].get<std::uint64_t>();
    s.validate();
    return s;
}

Environment::Environment(EnvironmentSpec spec) : spec_(spec) { spec_.validate(); }

namespace {
constexpr std::uint64_t kSiteSalt = 0x243F6A8885A308D3ULL;
}

double Environment::rate_at(std::int64_t site) const {
    if (spec_.family == EnvFamily::Constant) return spec_.lo;
    const std::uint64_t h =
        splitmix_hash(spec_.seed ^ splitmix_hash(static_cast<std::uint64_t>(site) + kSiteSalt));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (spec_.family == EnvFamily::TwoPoint) return u < spec_.p_lo ? spec_.lo : spec_.hi;
    return spec_.lo + u * (spec_.hi - spec_.lo);
}

std::pair<Environment, Environment> Environment::bounding() const {
    return {Environment(EnvironmentSpec::constant(spec_.ei(), spec_.seed)),
            Environment(EnvironmentSpec::constant(spec_.es(), spec_.seed))};
}

void Environment::export_window_csv(std::ostream& out, std::int64_t lo_site,
                                    std::int64_t hi_site) const {
    out << "site,rate\n";
    char buf[64];
    for (std::int64_t x = lo_site; x <= hi_site; ++x) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(x), rate_at(x));
        out << buf;
    }
}

Environment sample_environment(const EnvironmentSpec& spec) { return Environment(spec); }

}  // namespace brwre

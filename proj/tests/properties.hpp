#pragma once

// Seeded property checks shared by the unit suite and the acceptance binary.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pos/rng.hpp"

namespace postest {

struct PropertyReport {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;
    bool ok() const { return failures == 0 && cases > 0; }
};

// Runs `check` on `cases` independent generators; `check` returns false and
// fills `why` to report a counterexample.
PropertyReport for_all(const std::string& name, std::size_t cases, std::uint64_t seed,
                       const std::function<bool(pos::RngStream&, std::string&)>& check);

PropertyReport quantile_round_trip(std::size_t cases, std::uint64_t seed);
PropertyReport fitted_quantile_round_trip(std::size_t cases, std::uint64_t seed);
PropertyReport half_normal_medians(std::size_t cases, std::uint64_t seed);
PropertyReport staged_monotonicity(std::size_t cases, std::uint64_t seed);
PropertyReport determinism_under_seed(std::size_t cases, std::uint64_t seed);
PropertyReport bridge_sandwich(std::size_t cases, std::uint64_t seed);
PropertyReport bridge_coverage(std::size_t cases, std::uint64_t seed);

std::vector<PropertyReport> all_properties(std::size_t cases, std::uint64_t seed);

std::string data_path(const std::string& name);
std::string golden_path(const std::string& name);
nlohmann::json load_json(const std::string& path);

// Drops volatile fields (generated_at) so reports can be compared.
nlohmann::json stable_report(nlohmann::json report);

// Numeric comparison of JSON documents: same structure, numbers within
// rel_tol (relative) or 1e-12 absolute. Returns the first differing path.
std::string json_diff(const nlohmann::json& a, const nlohmann::json& b, double rel_tol,
                      const std::string& path = "$");

}  // namespace postest

#pragma once

// Bridging from a phase II endpoint to different phase III endpoints through
// elicited conditional quantiles. For each draw of the phase II predictive
// effect theta*, the 10/50/90th percentiles of each target endpoint are
// interpolated at theta*, a distribution is fitted to the triple and one
// value is drawn. All targets share the theta* draw, which is what induces
// their dependence.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pos/map_predictive.hpp"
#include "pos/model.hpp"
#include "pos/rng.hpp"

namespace pos {

enum class Percentile { P10 = 0, P50 = 1, P90 = 2 };

struct ConditionalQuantileSet {
    std::string endpoint_id;
    std::vector<double> anchors;                 // ascending
    std::vector<std::array<double, 3>> triples;  // per anchor: p10, p50, p90

    void validate() const;
    // Re-expresses a set given on the reporting scale on the internal scale:
    // anchors and targets negated where benefit-negative, p10 and p90 swapped
    // and anchors re-sorted as needed.
    ConditionalQuantileSet oriented(Direction anchor_dir, Direction target_dir) const;
};

// Piecewise-linear in the anchors, extended linearly beyond the end anchors.
double interpolate_percentile(const ConditionalQuantileSet& set, Percentile p, double a);
std::array<double, 3> interpolate_triple(const ConditionalQuantileSet& set, double a);

enum class Family { PointMass, Normal, StudentT3, StudentT5, StudentT10, ShiftedLogNormal, ShiftedLogNormalLeft };
std::string_view to_string(Family f);

struct FittedDistribution {
    Family family = Family::Normal;
    double location = 0.0;  // normal/t: centre; log-normal: shift c
    double scale = 1.0;     // normal/t: scale; log-normal: exp(mu)
    double shape = 0.0;     // log-normal sigma
    double residual = 0.0;  // sum of squared quantile errors

    double quantile(double u) const;
};

// Least-squares fit to the 10/50/90th percentiles over normal, Student-t
// (3, 5, 10 df) and shifted log-normal in both orientations. Ties go to the
// normal, so symmetric triples always give a normal.
FittedDistribution fit_parametric(double p10, double p50, double p90);

struct MarginalPriorDraws {
    std::size_t rows = 0;
    std::vector<std::string> endpoint_ids;
    std::vector<double> values;              // rows x endpoints, internal scale
    std::vector<std::size_t> shared_source;  // theta* index used by each row
    std::size_t rejections = 0;
    std::vector<std::map<std::string, std::size_t>> family_counts;  // per endpoint

    double at(std::size_t row, std::size_t e) const { return values[row * endpoint_ids.size() + e]; }
    std::vector<double> column(std::size_t e) const;
};

// Rows whose interpolated triples cross are redrawn with a uniformly chosen
// theta*; more than 0.5% redraws is an error.
MarginalPriorDraws sample_marginal(std::span<const double> theta_star,
                                   const std::vector<ConditionalQuantileSet>& sets, std::uint64_t seed);

// Every trial of the program shares the bridged effect of its row.
MapDraws bridged_map_draws(const MarginalPriorDraws& draws, std::size_t trials);

struct BridgeFixture {
    Direction anchor_direction = Direction::BenefitPositive;
    std::vector<double> map_percentiles;  // optional annotations
    std::vector<ConditionalQuantileSet> sets;         // reporting scale
    std::vector<Direction> target_directions;

    static BridgeFixture from_json(const nlohmann::json& j);
    std::vector<ConditionalQuantileSet> internal_sets() const;
};

}  // namespace pos

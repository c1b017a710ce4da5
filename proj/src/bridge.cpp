#include "pos/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/parallel.hpp"

namespace pos {

namespace {

constexpr double kU[3] = {0.1, 0.5, 0.9};

double z90() {
    static const double z = normal_quantile(0.9);
    return z;
}

double t90(int df) {
    return boost::math::quantile(boost::math::students_t(static_cast<double>(df)), 0.9);
}

bool strictly_increasing(const std::array<double, 3>& q) { return q[0] < q[1] && q[1] < q[2]; }

bool collapsed(const std::array<double, 3>& q) {
    const double tol = 1e-12 * (1.0 + std::fabs(q[1]));
    return std::fabs(q[0] - q[1]) <= tol && std::fabs(q[2] - q[1]) <= tol;
}

}  // namespace

void ConditionalQuantileSet::validate() const {
    require(anchors.size() >= 2, ErrorKind::Validation,
            "bridge '" + endpoint_id + "': at least two conditioning values required");
    require(triples.size() == anchors.size(), ErrorKind::Validation,
            "bridge '" + endpoint_id + "': one percentile triple per conditioning value");
    for (std::size_t i = 1; i < anchors.size(); ++i)
        require(anchors[i] > anchors[i - 1], ErrorKind::Validation,
                "bridge '" + endpoint_id + "': conditioning values must be strictly ascending");
    for (const auto& t : triples)
        require(strictly_increasing(t) || collapsed(t), ErrorKind::Validation,
                "bridge '" + endpoint_id + "': percentiles must satisfy p10 < p50 < p90");
}

ConditionalQuantileSet ConditionalQuantileSet::oriented(Direction anchor_dir, Direction target_dir) const {
    ConditionalQuantileSet out;
    out.endpoint_id = endpoint_id;
    std::vector<std::size_t> order(anchors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (anchor_dir == Direction::BenefitNegative) std::reverse(order.begin(), order.end());
    for (std::size_t i : order) {
        out.anchors.push_back(orient(anchor_dir, anchors[i]));
        auto t = triples[i];
        if (target_dir == Direction::BenefitNegative) t = {-t[2], -t[1], -t[0]};
        out.triples.push_back(t);
    }
    return out;
}

double interpolate_percentile(const ConditionalQuantileSet& set, Percentile p, double a) {
    const auto& x = set.anchors;
    const int k = static_cast<int>(p);
    const std::size_t n = x.size();
    // Segment index: the nearest segment for extrapolation.
    std::size_t i = 0;
    if (a >= x[n - 1]) {
        i = n - 2;
    } else if (a > x[0]) {
        i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), a) - x.begin()) - 1;
    }
    if (a == x[i]) return set.triples[i][k];
    if (a == x[i + 1]) return set.triples[i + 1][k];
    const double y0 = set.triples[i][k], y1 = set.triples[i + 1][k];
    return y0 + (y1 - y0) * (a - x[i]) / (x[i + 1] - x[i]);
}

std::array<double, 3> interpolate_triple(const ConditionalQuantileSet& set, double a) {
    return {interpolate_percentile(set, Percentile::P10, a), interpolate_percentile(set, Percentile::P50, a),
            interpolate_percentile(set, Percentile::P90, a)};
}

std::string_view to_string(Family f) {
    switch (f) {
        case Family::PointMass: return "point-mass";
        case Family::Normal: return "normal";
        case Family::StudentT3: return "student-t3";
        case Family::StudentT5: return "student-t5";
        case Family::StudentT10: return "student-t10";
        case Family::ShiftedLogNormal: return "shifted-lognormal";
        case Family::ShiftedLogNormalLeft: return "shifted-lognormal-left";
    }
    return "?";
}

double FittedDistribution::quantile(double u) const {
    switch (family) {
        case Family::PointMass: return location;
        case Family::Normal: return location + scale * normal_quantile(u);
        case Family::StudentT3:
        case Family::StudentT5:
        case Family::StudentT10: {
            const double df = family == Family::StudentT3 ? 3 : family == Family::StudentT5 ? 5 : 10;
            return location + scale * boost::math::quantile(boost::math::students_t(df), u);
        }
        case Family::ShiftedLogNormal: return location + scale * std::exp(shape * normal_quantile(u));
        case Family::ShiftedLogNormalLeft: return location - scale * std::exp(-shape * normal_quantile(u));
    }
    return location;
}

FittedDistribution fit_parametric(double p10, double p50, double p90) {
    const std::array<double, 3> q{p10, p50, p90};
    if (collapsed(q)) return {Family::PointMass, p50, 0.0, 0.0, 0.0};
    require(strictly_increasing(q), ErrorKind::Domain, "fit_parametric: percentiles must be strictly increasing");

    auto residual = [&](const FittedDistribution& d) {
        double r = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double e = d.quantile(kU[i]) - q[i];
            r += e * e;
        }
        return r;
    };

    // Location-scale families: quantiles m + s * (-t, 0, t); least squares
    // gives m = mean(q), s = (q90 - q10) / (2 t).
    FittedDistribution best{Family::Normal, (p10 + p50 + p90) / 3.0, (p90 - p10) / (2.0 * z90()), 0.0, 0.0};
    best.residual = residual(best);
    const std::pair<Family, int> ts[] = {{Family::StudentT3, 3}, {Family::StudentT5, 5}, {Family::StudentT10, 10}};
    for (const auto& [fam, df] : ts) {
        FittedDistribution d{fam, (p10 + p50 + p90) / 3.0, (p90 - p10) / (2.0 * t90(df)), 0.0, 0.0};
        d.residual = residual(d);
        if (d.residual < best.residual - 1e-15) best = d;
    }

    // Shifted log-normal fits three percentiles exactly when skewed.
    const double r = (p90 - p50) / (p50 - p10);
    if (std::fabs(std::log(r)) > 1e-9) {
        FittedDistribution d;
        if (r > 1.0) {
            d.family = Family::ShiftedLogNormal;
            d.shape = std::log(r) / z90();
            d.scale = (p90 - p50) / (r - 1.0);
            d.location = p50 - d.scale;
        } else {
            const double rl = 1.0 / r;
            d.family = Family::ShiftedLogNormalLeft;
            d.shape = std::log(rl) / z90();
            d.scale = (p50 - p10) / (rl - 1.0);
            d.location = p50 + d.scale;
        }
        d.residual = residual(d);
        if (d.residual < best.residual - 1e-15) best = d;
    }
    return best;
}

std::vector<double> MarginalPriorDraws::column(std::size_t e) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, e);
    return out;
}

MarginalPriorDraws sample_marginal(std::span<const double> theta_star,
                                   const std::vector<ConditionalQuantileSet>& sets, std::uint64_t seed) {
    require(!theta_star.empty(), ErrorKind::Domain, "bridge: no theta* draws");
    require(!sets.empty(), ErrorKind::Configuration, "bridge: no target endpoints");
    for (const auto& s : sets) s.validate();
    const std::size_t n = theta_star.size();
    const std::size_t d = sets.size();

    MarginalPriorDraws out;
    out.rows = n;
    for (const auto& s : sets) out.endpoint_ids.push_back(s.endpoint_id);
    out.values.resize(n * d);
    out.shared_source.resize(n);
    out.family_counts.resize(d);

    std::vector<std::uint8_t> family(n * d);
    std::vector<std::uint32_t> redraws(n, 0);
    const RngStream root = stage_stream(seed, streams::kBridge);
    constexpr int kMaxAttempts = 1000;
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        std::vector<FittedDistribution> fits(d);
        for (std::size_t r = begin; r < end; ++r) {
            RngStream rng = root.child(r);
            std::size_t src = r;
            bool ok = false;
            for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
                ok = true;
                for (std::size_t e = 0; e < d && ok; ++e) {
                    const auto t = interpolate_triple(sets[e], theta_star[src]);
                    if (collapsed(t)) {
                        fits[e] = {Family::PointMass, t[1], 0.0, 0.0, 0.0};
                    } else if (strictly_increasing(t)) {
                        fits[e] = fit_parametric(t[0], t[1], t[2]);
                    } else {
                        ok = false;
                    }
                }
                if (ok) break;
                ++redraws[r];
                src = static_cast<std::size_t>(rng.below(n));
            }
            require(ok, ErrorKind::Numerical, "bridge: could not find a theta* draw with ordered percentiles");
            out.shared_source[r] = src;
            for (std::size_t e = 0; e < d; ++e) {
                out.values[r * d + e] = fits[e].quantile(rng.uniform());
                family[r * d + e] = static_cast<std::uint8_t>(fits[e].family);
            }
        }
    });
    for (std::size_t r = 0; r < n; ++r) {
        out.rejections += redraws[r];
        for (std::size_t e = 0; e < d; ++e)
            ++out.family_counts[e][std::string(to_string(static_cast<Family>(family[r * d + e])))];
    }
    if (static_cast<double>(out.rejections) > 0.005 * static_cast<double>(n)) {
        fail(ErrorKind::Numerical, "bridge: " + std::to_string(out.rejections) + " of " + std::to_string(n) +
                                       " theta* draws gave crossing percentiles (limit 0.5%)");
    }
    return out;
}

MapDraws bridged_map_draws(const MarginalPriorDraws& draws, std::size_t trials) {
    require(trials >= 1, ErrorKind::Configuration, "bridge: at least one trial required");
    const std::size_t d = draws.endpoint_ids.size();
    MapDraws m;
    m.rows = draws.rows;
    m.trials = trials;
    m.endpoints = d;
    m.theta3.resize(m.rows * trials * d);
    m.tau3.assign(m.rows * d, 0.0);
    m.source_mu_index = draws.shared_source;
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t k = 0; k < trials; ++k)
            for (std::size_t e = 0; e < d; ++e) m.theta3[(r * trials + k) * d + e] = draws.at(r, e);
    return m;
}

BridgeFixture BridgeFixture::from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::Schema, "bridge fixture must be an object");
    require(j.contains("anchors") && j["anchors"].is_array(), ErrorKind::Schema, "bridge fixture: 'anchors' array required");
    require(j.contains("targets") && j["targets"].is_array() && !j["targets"].empty(), ErrorKind::Schema,
            "bridge fixture: non-empty 'targets' array required");
    BridgeFixture f;
    f.anchor_direction = parse_direction(j.value("anchor_direction", std::string("benefit-positive")));
    std::vector<double> anchors;
    for (const auto& a : j["anchors"]) {
        require(a.is_number(), ErrorKind::Schema, "bridge fixture: anchors must be numeric");
        anchors.push_back(a.get<double>());
    }
    if (j.contains("map_percentiles"))
        for (const auto& p : j["map_percentiles"]) f.map_percentiles.push_back(p.get<double>());
    for (const auto& t : j["targets"]) {
        require(t.is_object() && t.contains("endpoint") && t.contains("quantiles"), ErrorKind::Schema,
                "bridge fixture: each target needs 'endpoint' and 'quantiles'");
        ConditionalQuantileSet s;
        s.endpoint_id = t["endpoint"].get<std::string>();
        s.anchors = anchors;
        for (const auto& q : t["quantiles"]) {
            require(q.is_array() && q.size() == 3, ErrorKind::Schema,
                    "bridge fixture: quantiles must be [p10, p50, p90] triples");
            s.triples.push_back({q[0].get<double>(), q[1].get<double>(), q[2].get<double>()});
        }
        s.validate();
        f.sets.push_back(std::move(s));
        f.target_directions.push_back(parse_direction(t.value("direction", std::string("benefit-positive"))));
    }
    return f;
}

std::vector<ConditionalQuantileSet> BridgeFixture::internal_sets() const {
    std::vector<ConditionalQuantileSet> out;
    for (std::size_t i = 0; i < sets.size(); ++i) out.push_back(sets[i].oriented(anchor_direction, target_directions[i]));
    return out;
}

}  // namespace pos

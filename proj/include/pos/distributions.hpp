#pragma once

// Normal, half-normal and bivariate-normal helpers. Only the distributions
// the PoS calculation needs live here.

#include <array>
#include <cmath>
#include <numbers>

namespace pos {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;
inline constexpr double kInvSqrt2 = 0.707106781186547524400844362104849;

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double normal_pdf(double x, double mean, double sd) {
    return normal_pdf((x - mean) / sd) / sd;
}

inline double normal_logpdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

// Standard normal cdf via erfc; relative accuracy near machine precision in
// both tails.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// Upper tail 1 - Phi(x) without cancellation.
inline double normal_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

// Standard normal quantile. Wichura's AS241 rational approximation followed by
// one Halley step against normal_cdf. Returns +/-inf at 1 and 0.
double normal_quantile(double p);

// Mills-ratio hazard phi(a) / (1 - Phi(a)), stable for large a.
double normal_hazard(double a);

inline double expit(double x) {
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Half-normal HN(scale^2): distribution of |X| with X ~ N(0, scale^2).
struct HalfNormal {
    double scale = 1.0;

    double median() const;
    double quantile(double p) const { return scale * normal_quantile(0.5 * (1.0 + p)); }
    double cdf(double x) const { return x <= 0 ? 0.0 : 2.0 * normal_cdf(x / scale) - 1.0; }
    // Log density up to nothing: includes the factor 2.
    double logpdf(double x) const {
        return x < 0 ? -INFINITY : std::log(2.0) + normal_logpdf(x, 0.0, scale);
    }
};

// 2x2 symmetric matrix stored as (a, b, c) = [[a, b], [b, c]].
struct Sym2 {
    double a = 0, b = 0, c = 0;

    double det() const { return a * c - b * b; }
    Sym2 operator+(const Sym2& o) const { return {a + o.a, b + o.b, c + o.c}; }
};

// Covariance [[s1^2, r s1 s2], [r s1 s2, s2^2]].
inline Sym2 make_cov(double s1, double s2, double r) { return {s1 * s1, r * s1 * s2, s2 * s2}; }

// Bivariate normal log density. Caller guarantees det > 0.
inline double bvn_logpdf(double x1, double x2, double m1, double m2, const Sym2& cov) {
    const double det = cov.det();
    const double d1 = x1 - m1, d2 = x2 - m2;
    const double q = (cov.c * d1 * d1 - 2.0 * cov.b * d1 * d2 + cov.a * d2 * d2) / det;
    return -0.5 * q - 0.5 * std::log(det) - 2.0 * kLogSqrt2Pi;
}

// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

}  // namespace pos

#pragma once

#include <functional>

namespace pos {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    int intervals = 0;
};

// Globally adaptive Gauss-Kronrod (7/15) integration on [a, b]: the interval
// with the largest error estimate is bisected until the summed error is below
// max(abs_tol, rel_tol * |value|). Throws ErrorKind::Numerical if the limit on
// subintervals is reached first.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-10, double rel_tol = 1e-12, int max_intervals = 500);

}  // namespace pos

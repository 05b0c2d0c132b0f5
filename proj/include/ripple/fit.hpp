// fit.hpp — ordinary least squares for a straight line

#pragma once

#include <cmath>
#include <span>

#include "ripple/errors.hpp"

namespace ripple {

struct LinearFit {
    double slope{0.0};
    double intercept{0.0};
    double slope_error{0.0};  // standard error of the slope
    std::size_t samples{0};
};

/// y = intercept + slope * x. Needs at least three points and two distinct x.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw NumericalError("fit_line: size mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw NumericalError("fit_line: need at least 3 samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw NumericalError("fit_line: abscissae are all equal");
    LinearFit f;
    f.samples = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        rss += e * e;
    }
    f.slope_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    return f;
}

}  // namespace ripple

#include "ivskew/blackscholes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ivskew/errors.hpp"

namespace ivskew {

double norm_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double unit_put(double theta, double x) {
    if (theta < 0.0) throw ValidationError("unit_put: negative total variance");
    if (theta == 0.0) return std::max(1.0 - std::exp(x), 0.0);
    const double st = std::sqrt(theta);
    return norm_cdf(-x / st + 0.5 * st) - std::exp(x) * norm_cdf(-x / st - 0.5 * st);
}

double bs_put(double tau, double x, double sigma) {
    if (tau < 0.0) throw ValidationError("bs_put: negative maturity");
    if (sigma < 0.0) throw ValidationError("bs_put: negative volatility");
    return unit_put(sigma * sigma * tau, x);
}

double unit_put_dtheta(double theta, double x) {
    if (theta <= 0.0) return 0.0;
    const double st = std::sqrt(theta);
    const double d = -x / st + 0.5 * st;
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * d * d) / (2.0 * st);
}

double implied_vol(double price, double tau, double x, double lo, double hi) {
    if (tau <= 0.0) throw ValidationError("implied_vol: tau must be positive");
    const double p_lo = bs_put(tau, x, lo);
    const double p_hi = bs_put(tau, x, hi);
    if (price < p_lo || price > p_hi) {
        std::ostringstream os;
        os << "implied_vol: price " << price << " outside bracket ["
           << p_lo << ", " << p_hi << "] for sigma in [" << lo << ", " << hi << "]";
        throw NumericError(os.str());
    }

    double a = lo, b = hi;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (a + b);
        if (bs_put(tau, x, mid) < price) a = mid; else b = mid;
    }

    double sigma = 0.5 * (a + b);
    for (int it = 0; it < 8; ++it) {
        const double theta = sigma * sigma * tau;
        const double f = unit_put(theta, x) - price;
        const double df = unit_put_dtheta(theta, x) * 2.0 * sigma * tau;
        if (df <= 0.0) break;
        const double step = f / df;
        const double next = std::clamp(sigma - step, a, b);
        if (std::abs(next - sigma) < 1e-14) { sigma = next; break; }
        sigma = next;
    }
    return sigma;
}

}  // namespace ivskew

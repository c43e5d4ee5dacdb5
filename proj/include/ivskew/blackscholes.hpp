#pragma once

namespace ivskew {

/// Standard normal cumulative distribution function.
double norm_cdf(double z);

/// Black-Scholes put price per unit strike as a function of total variance
/// theta = sigma^2 * tau and log-moneyness x. Returns the payoff (1-e^x)^+
/// at theta = 0.
double unit_put(double theta, double x);

/// Black-Scholes put price per unit strike.
double bs_put(double tau, double x, double sigma);

/// Derivative of unit_put with respect to theta (used by the Newton polish).
double unit_put_dtheta(double theta, double x);

/// Inverts bs_put in sigma on [lo, hi]: bisection first, Newton polish after.
/// Absolute tolerance 1e-10 in sigma. Throws NumericError when the price
/// lies outside [bs_put(lo), bs_put(hi)], naming the violated bound.
double implied_vol(double price, double tau, double x,
                   double lo = 0.01, double hi = 2.0);

}  // namespace ivskew

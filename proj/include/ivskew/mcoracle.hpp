#pragma once

#include <cstdint>
#include <vector>

#include "ivskew/contracts.hpp"
#include "ivskew/svmodels.hpp"

namespace ivskew {

/// Monte Carlo run configuration. steps = 0 selects the default of
/// 200 Euler steps per quarter-year of maturity.
struct McConfig {
    long paths = 200000;
    int steps = 0;
    std::uint64_t seed = 0;
    bool antithetic = true;
};

/// Monte Carlo estimate with its standard error.
struct McEstimate {
    double price;
    double stderr_;
};

/// Euler-Maruyama oracle for the small-risk-aversion limit of the put
/// indifference price: simulates dS = sigma(Y) S dW1 and
/// dY = (m(Y) - (rho + eta*rho')*a(Y)*lambda(Y)) dt + a(Y) dW with
/// correlation rho, and averages n(K - S_T)^+. Batches derive independent
/// streams from (seed, batch index) and merge in batch order, so results
/// are identical with and without the parallel path.
McEstimate mc_adjusted_price(const SvModel& model, double eta,
                             const PutContract& contract, double s0, double y0,
                             const McConfig& cfg);

/// Static entropic risk measure (1/gamma) log E[exp(-gamma xi)] over an
/// empirical sample, evaluated with a max shift for overflow safety.
double static_entropic(const std::vector<double>& samples, double gamma);

}  // namespace ivskew

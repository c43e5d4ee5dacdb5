#include "ivskew/mcoracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ivskew/parallel.hpp"

namespace ivskew {

namespace {

constexpr long kBatchSize = 4096;  ///< paths (or antithetic pairs) per stream

struct BatchStats {
    double sum = 0.0;
    double sum_sq = 0.0;
    long count = 0;
    int bad_step = -1;  ///< first step index with a non-finite value, if any
};

}  // namespace

McEstimate mc_adjusted_price(const SvModel& model, double eta,
                             const PutContract& contract, double s0, double y0,
                             const McConfig& cfg) {
    if (model.asymptotics_only)
        throw ValidationError("mc_adjusted_price: model violates the bounded-coefficient assumption");
    if (cfg.paths < 1) throw ValidationError("mc_adjusted_price: paths must be >= 1");
    if (s0 <= 0.0) throw ValidationError("mc_adjusted_price: s0 must be positive");

    const double T = contract.maturity;
    const int steps = cfg.steps > 0
        ? cfg.steps
        : std::max(50, static_cast<int>(std::lround(200.0 * T / 0.25)));
    const double dt = T / steps;
    const double sq_dt = std::sqrt(dt);
    const double rho = model.rho, rhop = model.rhop;
    const double K = contract.strike;
    const double n_puts = contract.quantity;

    const long units = cfg.antithetic ? cfg.paths / 2 : cfg.paths;
    if (units < 1) throw ValidationError("mc_adjusted_price: too few paths for antithetic pairs");
    const int n_batches = static_cast<int>((units + kBatchSize - 1) / kBatchSize);
    std::vector<BatchStats> stats(n_batches);

    parallel_for(n_batches, [&](int b) {
        std::seed_seq sq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                         static_cast<std::uint32_t>(cfg.seed >> 32),
                         static_cast<std::uint32_t>(b)};
        std::mt19937_64 rng(sq);
        std::normal_distribution<double> nd(0.0, 1.0);

        BatchStats& st = stats[b];
        const long lo = static_cast<long>(b) * kBatchSize;
        const long hi = std::min(lo + kBatchSize, units);
        std::vector<double> w1(steps), w2(steps);
        for (long p = lo; p < hi; ++p) {
            for (int k = 0; k < steps; ++k) { w1[k] = nd(rng); w2[k] = nd(rng); }
            double pay = 0.0;
            const int reps = cfg.antithetic ? 2 : 1;
            for (int r = 0; r < reps; ++r) {
                const double sign = (r == 0) ? 1.0 : -1.0;
                double S = s0, Y = y0;
                for (int k = 0; k < steps; ++k) {
                    const double sv = model.sigma(Y);
                    const double av = model.a(Y);
                    const double lam = model.mu(Y) / sv;
                    const double dw1 = sign * w1[k] * sq_dt;
                    const double dw = rho * sign * w1[k] + rhop * sign * w2[k];
                    S += sv * S * dw1;
                    Y += (model.m(Y) - (rho + eta * rhop) * av * lam) * dt +
                         av * dw * sq_dt;
                    if (!std::isfinite(S) || !std::isfinite(Y)) {
                        if (st.bad_step < 0) st.bad_step = k;
                        S = s0; Y = y0;
                        break;
                    }
                }
                pay += n_puts * std::max(K - S, 0.0);
            }
            pay /= reps;
            st.sum += pay;
            st.sum_sq += pay * pay;
            ++st.count;
        }
    });

    double sum = 0.0, sum_sq = 0.0;
    long count = 0;
    for (const BatchStats& st : stats) {
        if (st.bad_step >= 0) {
            std::ostringstream os;
            os << "mc_adjusted_price: non-finite path value at step " << st.bad_step;
            throw NumericError(os.str());
        }
        sum += st.sum;
        sum_sq += st.sum_sq;
        count += st.count;
    }
    const double mean = sum / count;
    const double var = std::max(0.0, (sum_sq - count * mean * mean) /
                                         std::max<long>(count - 1, 1));
    return {mean, std::sqrt(var / count)};
}

double static_entropic(const std::vector<double>& samples, double gamma) {
    if (samples.empty()) throw ValidationError("static_entropic: empty sample set");
    if (gamma <= 0.0) throw ValidationError("static_entropic: gamma must be positive");
    double shift = -1e300;
    for (double xi : samples) shift = std::max(shift, -gamma * xi);
    double acc = 0.0;
    for (double xi : samples) acc += std::exp(-gamma * xi - shift);
    return (shift + std::log(acc / samples.size())) / gamma;
}

}  // namespace ivskew

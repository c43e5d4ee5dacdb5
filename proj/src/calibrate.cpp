#include "ivskew/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ivskew/asymptotics.hpp"
#include "ivskew/errors.hpp"
#include "ivskew/parallel.hpp"

namespace ivskew {

double model_vol_im(double kappa, double y, double tau, double x) {
    if (y <= 0.0) throw ValidationError("model_vol_im: y must be positive");
    if (tau < 0.0) throw ValidationError("model_vol_im: tau must be nonnegative");
    return i0(kappa, x, y) * (1.0 + tau * i1(kappa, 0.0, 0.0, x, y));
}

double wing_regressor(double kappa, double y, double tau, double x) {
    if (std::abs(x) < 1e-6 * y) return 0.5 * tau * y * y * y;
    const double ps = psi(kappa, x, y);
    return 0.5 * tau * x * x * x / (ps * ps * ps);
}

namespace {

constexpr double kKappaMax = 50.0;
constexpr double kYMax = 2.0;

struct NmResult {
    std::array<double, 2> x;
    double f;
    bool boundary;
};

/// Derivative-free Nelder-Mead on two parameters with box penalty.
template <typename F>
NmResult nelder_mead_2d(F&& obj, std::array<double, 2> start) {
    struct Vertex { std::array<double, 2> x; double f; };
    auto eval = [&](const std::array<double, 2>& p) { return obj(p[0], p[1]); };

    std::array<Vertex, 3> s;
    s[0] = {start, eval(start)};
    for (int k = 0; k < 2; ++k) {
        auto p = start;
        p[k] += (p[k] != 0.0) ? 0.1 * std::abs(p[k]) : 0.05;
        s[k + 1] = {p, eval(p)};
    }

    const double alpha = 1.0, gamma_e = 2.0, rho_c = 0.5, sigma_s = 0.5;
    for (int it = 0; it < 2000; ++it) {
        std::sort(s.begin(), s.end(),
                  [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
        const double diam = std::max(
            std::abs(s[2].x[0] - s[0].x[0]) + std::abs(s[2].x[1] - s[0].x[1]),
            std::abs(s[1].x[0] - s[0].x[0]) + std::abs(s[1].x[1] - s[0].x[1]));
        if (diam < 1e-10) break;

        std::array<double, 2> cen{0.5 * (s[0].x[0] + s[1].x[0]),
                                  0.5 * (s[0].x[1] + s[1].x[1])};
        auto mix = [&](double t) {
            return std::array<double, 2>{cen[0] + t * (cen[0] - s[2].x[0]),
                                         cen[1] + t * (cen[1] - s[2].x[1])};
        };
        auto refl = mix(alpha);
        const double f_r = eval(refl);
        if (f_r < s[0].f) {
            auto exp_p = mix(gamma_e);
            const double f_e = eval(exp_p);
            s[2] = (f_e < f_r) ? Vertex{exp_p, f_e} : Vertex{refl, f_r};
        } else if (f_r < s[1].f) {
            s[2] = {refl, f_r};
        } else {
            auto con = mix(f_r < s[2].f ? rho_c : -rho_c);
            const double f_c = eval(con);
            if (f_c < std::min(f_r, s[2].f)) {
                s[2] = {con, f_c};
            } else {
                for (int k = 1; k < 3; ++k) {
                    for (int d = 0; d < 2; ++d)
                        s[k].x[d] = s[0].x[d] + sigma_s * (s[k].x[d] - s[0].x[d]);
                    s[k].f = eval(s[k].x);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(),
              [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    const auto& best = s[0].x;
    const bool boundary = best[0] < 1e-6 || best[0] > kKappaMax - 1e-6 ||
                          best[1] < 1e-6 || best[1] > kYMax - 1e-6;
    return {best, s[0].f, boundary};
}

}  // namespace

Stage1Fit fit_stage1(const std::vector<MarketQuote>& quotes, double split_x) {
    std::vector<MarketQuote> sel;
    for (const auto& q : quotes)
        if (q.x >= split_x && q.x <= 0.0) sel.push_back(q);
    if (sel.size() < 3)
        throw ValidationError("fit_stage1: fewer than 3 quotes in [split_x, 0]");
    const double tau = sel.front().tau;
    for (const auto& q : sel)
        if (std::abs(q.tau - tau) > 1e-12)
            throw ValidationError("fit_stage1: quotes do not share a common tau");

    auto obj = [&](double kappa, double y) {
        if (kappa <= 0.0 || kappa > kKappaMax || y <= 0.0 || y > kYMax)
            return 1e10;
        double acc = 0.0;
        for (const auto& q : sel) {
            const double r = model_vol_im(kappa, y, q.tau, q.x) - q.vol;
            acc += q.weight * r * r;
        }
        return acc;
    };

    const auto atm = std::min_element(sel.begin(), sel.end(),
                                      [](const MarketQuote& a, const MarketQuote& b) {
                                          return std::abs(a.x) < std::abs(b.x);
                                      });
    const double y_start = atm->vol;

    const std::array<double, 3> kappa_starts{1.0, 5.0, 10.0};
    std::array<NmResult, 3> legs;
    parallel_for(static_cast<int>(kappa_starts.size()), [&](int i) {
        legs[i] = nelder_mead_2d(obj, {kappa_starts[i], y_start});
    });

    int win = 0;
    for (int i = 1; i < 3; ++i)
        if (legs[i].f < legs[win].f) win = i;

    bool flagged = legs[win].boundary;
    for (int i = 0; i < 3; ++i) {
        if (i == win) continue;
        const bool same_f =
            std::abs(legs[i].f - legs[win].f) <= 1e-12 * (1.0 + legs[win].f);
        const bool same_x =
            std::abs(legs[i].x[0] - legs[win].x[0]) <=
                1e-3 * (1.0 + std::abs(legs[win].x[0])) &&
            std::abs(legs[i].x[1] - legs[win].x[1]) <=
                1e-3 * (1.0 + std::abs(legs[win].x[1]));
        if (same_f && !same_x) flagged = true;
    }

    double wsum = 0.0;
    for (const auto& q : sel) wsum += q.weight;
    const double rmse = std::sqrt(legs[win].f / std::max(wsum, 1e-300));
    return {legs[win].x[0], legs[win].x[1], rmse,
            static_cast<int>(sel.size()), flagged};
}

Stage2Fit fit_stage2(const std::vector<MarketQuote>& quotes, double kappa_hat,
                     double y_hat, double x_max) {
    std::vector<MarketQuote> sel;
    for (const auto& q : quotes)
        if (q.x < x_max) sel.push_back(q);
    if (sel.empty())
        throw ValidationError("fit_stage2: no quotes with x < x_max");

    double num = 0.0, den = 0.0;
    for (const auto& q : sel) {
        const double g = wing_regressor(kappa_hat, y_hat, q.tau, q.x);
        const double r = q.vol - model_vol_im(kappa_hat, y_hat, q.tau, q.x);
        num += q.weight * r * g;
        den += q.weight * g * g;
    }
    if (den <= 0.0)
        throw NumericError("fit_stage2: all wing regressors vanish (mu*eta unidentifiable)");
    const double mu_eta = num / den;

    double ss = 0.0, wsum = 0.0;
    for (const auto& q : sel) {
        const double fit = model_vol_im(kappa_hat, y_hat, q.tau, q.x) +
                           mu_eta * wing_regressor(kappa_hat, y_hat, q.tau, q.x);
        ss += q.weight * (q.vol - fit) * (q.vol - fit);
        wsum += q.weight;
    }
    return {mu_eta, std::sqrt(ss / std::max(wsum, 1e-300)),
            static_cast<int>(sel.size())};
}

CalibrationResult calibrate(const std::vector<MarketQuote>& quotes,
                            double split_x) {
    if (quotes.empty()) throw ValidationError("calibrate: no quotes");
    const double tau = quotes.front().tau;
    for (const auto& q : quotes)
        if (std::abs(q.tau - tau) > 1e-12)
            throw ValidationError("calibrate: quotes span multiple maturities");

    const Stage1Fit s1 = fit_stage1(quotes, split_x);
    const Stage2Fit s2 = fit_stage2(quotes, s1.kappa_hat, s1.y_hat, split_x);

    CalibrationResult res;
    res.kappa_hat = s1.kappa_hat;
    res.y_hat = s1.y_hat;
    res.mu_eta_hat = s2.mu_eta_hat;
    res.split_x = split_x;
    res.rmse_stage1 = s1.rmse;
    res.rmse_stage2 = s2.rmse;
    res.n_quotes_stage1 = s1.n_quotes;
    res.n_quotes_stage2 = s2.n_quotes;
    res.boundary_flag = s1.boundary_flag;
    return res;
}

std::vector<MarketQuote> load_quotes_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open quote file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty quote file: " + path);
    auto strip = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
    };
    const std::string hdr = strip(line);
    const bool with_weight = hdr == "tau,log_moneyness,implied_vol,weight";
    if (!with_weight && hdr != "tau,log_moneyness,implied_vol")
        throw DataError("quote file header must be `tau,log_moneyness,implied_vol[,weight]`: " + path);

    std::vector<MarketQuote> quotes;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        std::istringstream ls(line);
        std::string f;
        std::vector<double> vals;
        try {
            while (std::getline(ls, f, ',')) vals.push_back(std::stod(strip(f)));
        } catch (const std::exception&) {
            throw DataError("non-numeric quote value at line " + std::to_string(lineno));
        }
        if (vals.size() != (with_weight ? 4u : 3u))
            throw DataError("malformed quote row at line " + std::to_string(lineno));
        MarketQuote q{vals[0], vals[1], vals[2], with_weight ? vals[3] : 1.0};
        if (q.tau <= 0.0 || q.vol <= 0.0 || q.weight < 0.0)
            throw DataError("invalid quote at line " + std::to_string(lineno));
        quotes.push_back(q);
    }
    return quotes;
}

}  // namespace ivskew

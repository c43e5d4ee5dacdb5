#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ivskew/asymptotics.hpp"
#include "ivskew/calibrate.hpp"
#include "ivskew/errors.hpp"

using namespace ivskew;

namespace {

std::vector<MarketQuote> planted_quotes(double kappa, double y, double mu_eta,
                                        double tau) {
    std::vector<MarketQuote> q;
    for (int k = 0; k <= 12; ++k) {
        const double x = -0.06 + 0.005 * k;
        q.push_back({tau, x, model_vol_im(kappa, y, tau, x)});
    }
    for (int k = 0; k < 19; ++k) {
        const double x = -0.25 + 0.01 * k;
        q.push_back({tau, x,
                     model_vol_im(kappa, y, tau, x) +
                         mu_eta * wing_regressor(kappa, y, tau, x)});
    }
    return q;
}

struct TempCsv {
    std::filesystem::path path;
    explicit TempCsv(const std::string& body) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("ivskew_quotes_" + std::to_string(counter++) + ".csv");
        std::ofstream out(path);
        out << body;
    }
    ~TempCsv() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("martingale-measure vol approximation") {
    CHECK(model_vol_im(7.0, 0.3, 0.1, 0.0) ==
          doctest::Approx(0.3 * (1.0 + 0.1 * 49.0 / 12.0)).epsilon(1e-14));
    CHECK(model_vol_im(6.6, 0.18, 9.0 / 365.0, -0.03) > 0.1);
    CHECK(model_vol_im(6.6, 0.18, 9.0 / 365.0, -0.03) < 0.4);
    CHECK_THROWS_AS(model_vol_im(7.0, 0.0, 0.1, 0.0), ValidationError);
    CHECK_THROWS_AS(model_vol_im(7.0, 0.3, -0.1, 0.0), ValidationError);

    SUBCASE("matches the zero-distortion expansion") {
        HwAsymptoticParams p{6.6, 123.0, 0.0, 0.18, 0.05};
        for (double x : {-0.2, -0.05, 0.0, 0.1})
            CHECK(model_vol_im(6.6, 0.18, 0.05, x) ==
                  doctest::Approx(approx_vol(p, x)).epsilon(1e-14));
    }
}

TEST_CASE("wing regressor") {
    const double tau = 0.1, y = 0.3, kappa = 7.0;
    CHECK(wing_regressor(kappa, y, tau, 0.0) ==
          doctest::Approx(0.5 * tau * y * y * y).epsilon(1e-14));
    CHECK(wing_regressor(kappa, y, tau, 1e-9) ==
          doctest::Approx(0.5 * tau * y * y * y).epsilon(1e-10));
    CHECK(wing_regressor(kappa, y, tau, -0.2) ==
          doctest::Approx(wing_regressor(kappa, y, tau, 0.2)).epsilon(1e-14));
    CHECK(wing_regressor(kappa, y, tau, -0.2) > 0.0);

    SUBCASE("is the distortion coefficient of the expansion") {
        for (double x : {-0.25, -0.1, 0.0, 0.15}) {
            const HwAsymptoticParams tilted{6.6, 175.0, 0.2, 0.18, 0.05};
            const HwAsymptoticParams flat{6.6, 175.0, 0.0, 0.18, 0.05};
            const double diff = approx_vol(tilted, x) - approx_vol(flat, x);
            CHECK(diff == doctest::Approx(175.0 * 0.2 *
                                          wing_regressor(6.6, 0.18, 0.05, x))
                              .epsilon(1e-11));
        }
    }
}

TEST_CASE("noise-free two-stage round trip") {
    const double kappa = 6.6, y = 0.18, mu_eta = 35.0, tau = 9.0 / 365.0;
    const auto quotes = planted_quotes(kappa, y, mu_eta, tau);
    const CalibrationResult res = calibrate(quotes, -0.06);

    CHECK(res.kappa_hat == doctest::Approx(kappa).epsilon(1e-4));
    CHECK(res.y_hat == doctest::Approx(y).epsilon(1e-5));
    CHECK(res.mu_eta_hat == doctest::Approx(mu_eta).epsilon(1e-3));
    CHECK(res.rmse_stage1 < 1e-6);
    CHECK(res.rmse_stage2 < 1e-6);
    CHECK(res.n_quotes_stage1 == 13);
    CHECK(res.n_quotes_stage2 == 19);
    CHECK(res.split_x == -0.06);
    CHECK_FALSE(res.boundary_flag);
}

TEST_CASE("full-surface data keeps the right orders and signs") {
    const double kappa = 6.6, y = 0.18, tau = 9.0 / 365.0;
    const HwAsymptoticParams p{kappa, 175.0, 0.2, y, tau};
    std::vector<MarketQuote> quotes;
    for (int k = 0; k <= 25; ++k) {
        const double x = -0.25 + 0.01 * k;
        quotes.push_back({tau, x, approx_vol(p, x)});
    }
    const CalibrationResult res = calibrate(quotes, -0.06);

    CHECK(res.kappa_hat > 0.9 * kappa);
    CHECK(res.kappa_hat < 1.15 * kappa);
    CHECK(res.y_hat == doctest::Approx(y).epsilon(0.02));
    CHECK(res.mu_eta_hat > 0.0);
    CHECK(res.mu_eta_hat > 0.3 * 175.0 * 0.2);
    CHECK(res.mu_eta_hat < 1.2 * 175.0 * 0.2);
    CHECK_FALSE(res.boundary_flag);
}

TEST_CASE("stage 2 solves the weighted normal equation") {
    const double kappa = 6.6, y = 0.18, tau = 9.0 / 365.0;
    std::vector<MarketQuote> quotes;
    for (int k = 0; k < 12; ++k) {
        const double x = -0.25 + 0.015 * k;
        const double bump = 1e-3 * std::sin(3.0 * k);
        quotes.push_back({tau, x,
                          model_vol_im(kappa, y, tau, x) +
                              20.0 * wing_regressor(kappa, y, tau, x) + bump,
                          1.0 + 0.1 * k});
    }
    const Stage2Fit fit = fit_stage2(quotes, kappa, y, -0.05);

    auto sum_sq = [&](double beta) {
        double acc = 0.0;
        for (const auto& q : quotes) {
            if (q.x >= -0.05) continue;
            const double r = q.vol - model_vol_im(kappa, y, q.tau, q.x) -
                             beta * wing_regressor(kappa, y, q.tau, q.x);
            acc += q.weight * r * r;
        }
        return acc;
    };
    const double f0 = sum_sq(fit.mu_eta_hat);
    for (double d : {1e-4, 1e-2, 1.0, 10.0}) {
        CHECK(f0 <= sum_sq(fit.mu_eta_hat + d));
        CHECK(f0 <= sum_sq(fit.mu_eta_hat - d));
    }
}

TEST_CASE("weight scaling leaves the fit unchanged") {
    auto quotes = planted_quotes(5.1, 0.22, -12.0, 0.04);
    for (std::size_t i = 0; i < quotes.size(); ++i)
        quotes[i].weight = 1.0 + 0.05 * static_cast<double>(i % 7);
    const CalibrationResult base = calibrate(quotes, -0.06);

    SUBCASE("exact for power-of-two scales") {
        auto scaled = quotes;
        for (auto& q : scaled) q.weight *= 4.0;
        const CalibrationResult res = calibrate(scaled, -0.06);
        CHECK(res.kappa_hat == base.kappa_hat);
        CHECK(res.y_hat == base.y_hat);
        CHECK(res.mu_eta_hat == base.mu_eta_hat);
        CHECK(res.rmse_stage1 == base.rmse_stage1);
        CHECK(res.rmse_stage2 == base.rmse_stage2);
    }
    SUBCASE("tight for general scales") {
        auto scaled = quotes;
        for (auto& q : scaled) q.weight *= 3.7;
        const CalibrationResult res = calibrate(scaled, -0.06);
        CHECK(res.kappa_hat == doctest::Approx(base.kappa_hat).epsilon(1e-6));
        CHECK(res.y_hat == doctest::Approx(base.y_hat).epsilon(1e-6));
        CHECK(res.mu_eta_hat == doctest::Approx(base.mu_eta_hat).epsilon(1e-6));
    }
}

TEST_CASE("negative distortion is recovered with its sign") {
    const auto quotes = planted_quotes(6.6, 0.18, -35.0, 9.0 / 365.0);
    const CalibrationResult res = calibrate(quotes, -0.06);
    CHECK(res.mu_eta_hat < 0.0);
    CHECK(res.mu_eta_hat == doctest::Approx(-35.0).epsilon(1e-3));
}

TEST_CASE("zero wing residuals give exactly zero distortion") {
    const double tau = 0.04;
    std::vector<MarketQuote> quotes;
    for (int k = 0; k < 5; ++k)
        quotes.push_back({tau, -0.2 + 0.02 * k, model_vol_im(4.0, 0.25, tau, -0.2 + 0.02 * k)});
    const Stage2Fit fit = fit_stage2(quotes, 4.0, 0.25, -0.05);
    CHECK(fit.mu_eta_hat == 0.0);
    CHECK(fit.rmse == 0.0);
    CHECK(fit.n_quotes == 5);
}

TEST_CASE("positive log-moneyness quotes are ignored") {
    auto quotes = planted_quotes(6.6, 0.18, 35.0, 9.0 / 365.0);
    const CalibrationResult base = calibrate(quotes, -0.06);
    quotes.push_back({9.0 / 365.0, 0.05, 0.5});
    quotes.push_back({9.0 / 365.0, 0.12, 0.9});
    const CalibrationResult res = calibrate(quotes, -0.06);
    CHECK(res.kappa_hat == base.kappa_hat);
    CHECK(res.y_hat == base.y_hat);
    CHECK(res.mu_eta_hat == base.mu_eta_hat);
    CHECK(res.n_quotes_stage1 == base.n_quotes_stage1);
    CHECK(res.n_quotes_stage2 == base.n_quotes_stage2);
}

TEST_CASE("degenerate quote sets raise the boundary flag") {
    std::vector<MarketQuote> quotes;
    for (int k = 0; k < 4; ++k) quotes.push_back({0.05, 0.0, 0.2});
    const Stage1Fit fit = fit_stage1(quotes, -0.06);
    CHECK(fit.boundary_flag);
}

TEST_CASE("stage 1 input validation") {
    std::vector<MarketQuote> q{{0.05, -0.02, 0.2}, {0.05, -0.01, 0.2}};
    CHECK_THROWS_AS(fit_stage1(q, -0.06), ValidationError);

    q.push_back({0.06, 0.0, 0.2});
    CHECK_THROWS_AS(fit_stage1(q, -0.06), ValidationError);

    std::vector<MarketQuote> wings{{0.05, -0.2, 0.2}, {0.05, -0.19, 0.2},
                                   {0.05, -0.18, 0.2}};
    CHECK_THROWS_AS(fit_stage1(wings, -0.06), ValidationError);
}

TEST_CASE("stage 2 input validation") {
    std::vector<MarketQuote> q{{0.05, -0.02, 0.2}};
    CHECK_THROWS_AS(fit_stage2(q, 5.0, 0.2, -0.06), ValidationError);

    std::vector<MarketQuote> zero_w{{0.05, -0.2, 0.2, 0.0}, {0.05, -0.15, 0.2, 0.0}};
    CHECK_THROWS_AS(fit_stage2(zero_w, 5.0, 0.2, -0.06), NumericError);
}

TEST_CASE("calibrate input validation") {
    CHECK_THROWS_AS(calibrate({}, -0.06), ValidationError);
    std::vector<MarketQuote> mixed{{0.05, -0.02, 0.2}, {0.06, -0.01, 0.2},
                                   {0.05, 0.0, 0.2}};
    CHECK_THROWS_AS(calibrate(mixed, -0.06), ValidationError);
}

TEST_CASE("quote CSV loading") {
    SUBCASE("three columns") {
        TempCsv f("tau,log_moneyness,implied_vol\n"
                  "0.05,-0.1,0.21\n"
                  "0.05,0.0,0.185\n");
        const auto q = load_quotes_csv(f.path.string());
        REQUIRE(q.size() == 2);
        CHECK(q[0].tau == 0.05);
        CHECK(q[0].x == -0.1);
        CHECK(q[0].vol == 0.21);
        CHECK(q[0].weight == 1.0);
        CHECK(q[1].x == 0.0);
    }
    SUBCASE("four columns with weights and padding") {
        TempCsv f("tau,log_moneyness,implied_vol,weight\n"
                  " 0.05 , -0.1 , 0.21 , 2.5 \n"
                  "\n"
                  "0.05,-0.2,0.24,0.0\n");
        const auto q = load_quotes_csv(f.path.string());
        REQUIRE(q.size() == 2);
        CHECK(q[0].weight == 2.5);
        CHECK(q[1].weight == 0.0);
    }
    SUBCASE("non-numeric value names the line") {
        TempCsv f("tau,log_moneyness,implied_vol\n"
                  "0.05,-0.1,0.21\n"
                  "0.05,abc,0.21\n");
        CHECK_THROWS_WITH_AS(load_quotes_csv(f.path.string()),
                             doctest::Contains("line 3"), DataError);
    }
    SUBCASE("wrong field count names the line") {
        TempCsv f("tau,log_moneyness,implied_vol\n"
                  "0.05,-0.1\n");
        CHECK_THROWS_WITH_AS(load_quotes_csv(f.path.string()),
                             doctest::Contains("line 2"), DataError);
    }
    SUBCASE("invalid values are rejected") {
        TempCsv f("tau,log_moneyness,implied_vol\n"
                  "0.05,-0.1,-0.21\n");
        CHECK_THROWS_AS(load_quotes_csv(f.path.string()), DataError);
        TempCsv g("tau,log_moneyness,implied_vol,weight\n"
                  "0.05,-0.1,0.21,-1.0\n");
        CHECK_THROWS_AS(load_quotes_csv(g.path.string()), DataError);
    }
    SUBCASE("bad header") {
        TempCsv f("maturity,strike,vol\n0.05,-0.1,0.21\n");
        CHECK_THROWS_AS(load_quotes_csv(f.path.string()), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_quotes_csv("/nonexistent/quotes.csv"), DataError);
    }
}

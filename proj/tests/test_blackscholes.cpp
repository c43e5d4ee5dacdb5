#include <doctest.h>

#include <cmath>

#include "ivskew/blackscholes.hpp"
#include "ivskew/errors.hpp"

using namespace ivskew;

TEST_CASE("normal cdf against high-precision references") {
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(norm_cdf(0.3) - 0.6179114221889526) < 1e-15);
    CHECK(std::abs(norm_cdf(1.96) - 0.9750021048517796) < 1e-15);
    CHECK(std::abs(norm_cdf(-2.5) - 0.006209665325776135) < 1e-16);
    CHECK(std::abs(norm_cdf(5.0) - 0.9999997133484281) < 1e-15);
    for (double z : {-3.0, -0.7, 0.0, 1.3, 4.0})
        CHECK(norm_cdf(z) + norm_cdf(-z) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("unit put values and limits") {
    CHECK(std::abs(unit_put(1.0, 0.0) - 0.3829249225480262) < 1e-15);
    CHECK(unit_put(0.0, -0.5) == doctest::Approx(1.0 - std::exp(-0.5)));
    CHECK(unit_put(0.0, 0.5) == 0.0);
    CHECK_THROWS_AS(unit_put(-1e-10, 0.0), ValidationError);

    SUBCASE("monotone increasing in total variance") {
        double prev = unit_put(0.001, -0.1);
        for (double th : {0.01, 0.05, 0.2, 1.0, 4.0}) {
            const double v = unit_put(th, -0.1);
            CHECK(v > prev);
            prev = v;
        }
    }
    SUBCASE("price above intrinsic, below strike bound") {
        for (double x : {-1.0, -0.2, 0.0, 0.3})
            for (double th : {0.01, 0.25, 1.0}) {
                const double v = unit_put(th, x);
                CHECK(v >= std::max(1.0 - std::exp(x), 0.0));
                CHECK(v < 1.0);
            }
    }
}

TEST_CASE("bs_put matches reference value") {
    CHECK(std::abs(bs_put(0.25, -0.1, 0.2) - 0.10308150925634414) < 1e-15);
    CHECK_THROWS_AS(bs_put(-0.1, 0.0, 0.2), ValidationError);
    CHECK_THROWS_AS(bs_put(0.1, 0.0, -0.2), ValidationError);
}

TEST_CASE("unit_put_dtheta is the finite-difference slope") {
    for (double th : {0.02, 0.2, 1.0})
        for (double x : {-0.4, 0.0, 0.25}) {
            const double h = 1e-6 * th;
            const double fd = (unit_put(th + h, x) - unit_put(th - h, x)) / (2 * h);
            CHECK(unit_put_dtheta(th, x) == doctest::Approx(fd).epsilon(1e-6));
        }
}

TEST_CASE("implied vol round trip") {
    for (double sigma : {0.05, 0.2, 0.7, 1.5})
        for (double x : {-0.3, 0.0, 0.2})
            for (double tau : {0.02, 0.25, 1.0}) {
                const double p = bs_put(tau, x, sigma);
                const double iv = implied_vol(p, tau, x, 0.01, 2.0);
                CHECK(std::abs(bs_put(tau, x, iv) - p) < 1e-12 * (1.0 + p));
                const double time_value = p - std::max(1.0 - std::exp(x), 0.0);
                if (time_value > 1e-9) CHECK(std::abs(iv - sigma) < 1e-9);
            }
}

TEST_CASE("implied vol rejects prices outside the bracket") {
    CHECK_THROWS_AS(implied_vol(0.9, 0.25, 0.0, 0.01, 2.0), NumericError);
    CHECK_THROWS_AS(implied_vol(1e-300, 0.25, 0.0, 0.05, 2.0), NumericError);
    CHECK_THROWS_AS(implied_vol(0.1, -0.25, 0.0), ValidationError);
    try {
        implied_vol(0.9, 0.25, 0.0, 0.01, 2.0);
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bracket") != std::string::npos);
    }
}

TEST_CASE("implied vol at bracket edges") {
    const double p = bs_put(0.25, 0.0, 0.4);
    CHECK(implied_vol(p, 0.25, 0.0, 0.4, 2.0) == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(implied_vol(p, 0.25, 0.0, 0.01, 0.4) == doctest::Approx(0.4).epsilon(1e-9));
}

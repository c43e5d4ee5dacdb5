#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ivskew {

/// Stochastic-volatility model coefficients for
///   dS = mu(Y) S dt + sigma(Y) S dW1,
///   dY = m(Y) dt + a(Y) (rho dW1 + rho' dW2).
struct SvModel {
    std::function<double(double)> mu;     ///< stock drift coefficient, per year
    std::function<double(double)> sigma;  ///< volatility, per sqrt(year)
    std::function<double(double)> m;      ///< vol-factor drift
    std::function<double(double)> a;      ///< vol-of-vol
    double rho = 0.0;                     ///< correlation, |rho| < 1
    double rhop = 1.0;                    ///< sqrt(1 - rho^2), stored derived
    double sigma_low = 0.0;               ///< global lower volatility bound
    double sigma_high = 0.0;              ///< global upper volatility bound
    double y_work_lo = -5.0;              ///< declared working interval in y
    double y_work_hi = 5.0;
    bool asymptotics_only = false;        ///< violates the bounded-coefficient assumption
    std::string name;
};

/// Coefficient-assumption validation summary over a y-interval.
struct ValidationReport {
    bool passed = false;
    double sigma_min = 0.0, sigma_max = 0.0;
    double a_min = 0.0;
    double max_lipschitz = 0.0;  ///< largest finite-difference quotient across coefficients
    std::vector<std::string> issues;
};

/// Sharpe ratio mu(y)/sigma(y). Throws ValidationError when sigma(y) <= 0.
double sharpe(const SvModel& model, double y);

/// Hull-White model sigma(y)=y, a(y)=kappa*y, m=0, rho=0, cubic drift
/// mu(y)=mu_coeff*y^3. Flagged asymptotics-only: sigma is not bounded away
/// from zero, so the bounded-coefficient PDE theory does not cover it.
SvModel make_hull_white(double mu_coeff, double kappa);

/// Arctangent volatility driven by an OU factor:
/// sigma(y) = 0.7/pi*(arctan(y-1)+pi/2)+0.03, m(y)=alpha*(mbar-y),
/// a = nu*sqrt(2*alpha); volatility bounds (0.03, 0.73).
SvModel make_arctan_ou(double alpha, double mbar, double nu, double rho,
                       std::function<double(double)> mu);

/// Arctangent-OU with the drift parametrization mu(y) = mu0*sigma(y)^2,
/// giving sharpe(y) = mu0*sigma(y).
SvModel make_arctan_ou(double alpha, double mbar, double nu, double rho,
                       double mu0);

/// Degenerate constant-volatility model: sigma(y)=sigma_const, mu=m=0.
SvModel make_const_sigma(double sigma_const, double a_const, double rho);

/// Solves sigma(y) = target for the arctan map by bisection on the model's
/// working interval.
double solve_sigma_level(const SvModel& model, double target);

/// Samples sigma, a, mu, m on [y_lo, y_hi] at the given resolution; reports
/// bound violations and finite-difference continuity diagnostics. A model
/// flagged asymptotics-only reports its known violation without failing.
ValidationReport validate_assumptions(const SvModel& model, double y_lo,
                                      double y_hi, int resolution = 201);

/// Builds a model from a JSON document naming a built-in family:
/// {"family":"arctan_ou"|"hull_white"|"const_sigma", ...parameters}.
SvModel model_from_json(const nlohmann::json& doc);

}  // namespace ivskew

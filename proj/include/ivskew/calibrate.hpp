#pragma once

#include <string>
#include <vector>

namespace ivskew {

/// One implied-volatility quote.
struct MarketQuote {
    double tau;           ///< years, > 0
    double x;             ///< log-moneyness
    double vol;           ///< implied vol, > 0
    double weight = 1.0;  ///< nonnegative least-squares weight
};

/// Output of the two-stage calibration.
struct CalibrationResult {
    double kappa_hat = 0.0;
    double y_hat = 0.0;
    double mu_eta_hat = 0.0;
    double split_x = 0.0;
    double rmse_stage1 = 0.0;
    double rmse_stage2 = 0.0;
    int n_quotes_stage1 = 0;
    int n_quotes_stage2 = 0;
    bool boundary_flag = false;  ///< stage-1 hit the parameter box, or the
                                 ///< multi-start legs tied in objective at
                                 ///< different parameters (unidentifiable fit)
};

/// Martingale-measure implied-vol approximation I_M(kappa, y; tau, x):
/// the Hull-White expansion with zero distortion.
double model_vol_im(double kappa, double y, double tau, double x);

/// Wing regressor tau*x^3 / (2 psi^3(x, y)) multiplying mu*eta in the
/// distorted expansion; even in x with limit tau*y^3/2 at x=0.
double wing_regressor(double kappa, double y, double tau, double x);

/// Stage 1: weighted least squares of I_M over quotes with x in [split_x, 0],
/// minimized over kappa in (0, 50], y in (0, 2] by Nelder-Mead from the
/// multi-start kappa in {1, 5, 10} with y started at the ATM quote. Requires
/// at least 3 in-range quotes sharing a common tau.
struct Stage1Fit {
    double kappa_hat;
    double y_hat;
    double rmse;
    int n_quotes;
    bool boundary_flag;
};
Stage1Fit fit_stage1(const std::vector<MarketQuote>& quotes, double split_x);

/// Stage 2: closed-form weighted linear least squares for the single
/// coefficient mu*eta on residuals vol - I_M against the wing regressor,
/// over quotes with x < x_max. Requires at least one such quote and a
/// nonzero regressor.
struct Stage2Fit {
    double mu_eta_hat;
    double rmse;
    int n_quotes;
};
Stage2Fit fit_stage2(const std::vector<MarketQuote>& quotes, double kappa_hat,
                     double y_hat, double x_max);

/// Runs stage 1 on [split_x, 0] and stage 2 on (-inf, split_x).
CalibrationResult calibrate(const std::vector<MarketQuote>& quotes,
                            double split_x = -0.06);

/// Reads quotes from CSV with header `tau,log_moneyness,implied_vol[,weight]`.
std::vector<MarketQuote> load_quotes_csv(const std::string& path);

}  // namespace ivskew

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ivskew/contracts.hpp"
#include "ivskew/riskdrivers.hpp"
#include "ivskew/svmodels.hpp"

namespace ivskew {

/// Uniform space-time grid for the pricing layer. nx and ny count interior
/// nodes; boundary nodes sit at the stated bounds.
struct GridSpec {
    double x_lo = -2.0;  ///< log-moneyness lower bound, < 0
    double x_hi = 2.0;   ///< log-moneyness upper bound, > 0
    double y_lo = -4.0;  ///< vol-factor lower bound
    double y_hi = 4.0;   ///< vol-factor upper bound
    int nx = 199;
    int ny = 127;
    int nt = 128;
    double T = 0.25;  ///< maturity in years

    void validate() const;
    double dx() const { return (x_hi - x_lo) / (nx + 1); }
    double dy() const { return (y_hi - y_lo) / (ny + 1); }
    double dt() const { return T / nt; }
    /// Interior node coordinates.
    std::vector<double> x_nodes() const;
    std::vector<double> y_nodes() const;
};

/// Time-stepping controls. theta = 1 is backward Euler, theta = 0.5 is
/// Crank-Nicolson; rannacher_steps initial steps are forced to backward
/// Euler to damp the payoff kink. The lagged nonlinear source gets one
/// fixed-point correction sweep per step when correction is set.
/// include_stock_drift adds mu(y) d/dx to the generator for comparison runs;
/// the default pricing form is the hedged one without it.
struct PdeScheme {
    double theta = 0.5;
    int rannacher_steps = 2;
    bool correction = true;
    bool include_stock_drift = false;

    void validate() const;
};

/// Dense record of a value-function solve. u is the option holder's value
/// and u_tilde the x-independent Merton component, both per unit strike;
/// the indifference price is nK (u_tilde - u). Immutable after construction.
struct PdeSolution {
    GridSpec grid;
    PdeScheme scheme;
    std::string model_name;
    double sigma_low = 0.0;   ///< model volatility bounds, kept for inversion brackets
    double sigma_high = 0.0;
    DriverSpec driver;
    PutContract contract;
    std::vector<double> u;        ///< [(nt+1) * nx * ny], time-major
    std::vector<double> u_tilde;  ///< [(nt+1) * ny]

    double u_at(int n, int i, int j) const {
        return u[(static_cast<std::size_t>(n) * grid.nx + i) * grid.ny + j];
    }
    double u_tilde_at(int n, int j) const {
        return u_tilde[static_cast<std::size_t>(n) * grid.ny + j];
    }
};

/// One point of an implied-vol curve; valid is false where the Black-Scholes
/// inversion found no root in its bracket.
struct VolPoint {
    double x = 0.0;
    double vol = 0.0;
    bool valid = false;
};

struct VolCurve {
    double tau = 0.0;
    double y0 = 0.0;
    std::vector<VolPoint> points;
};

/// Time-marches the quasilinear value PDE
///   -u_tau + L u = (1/K~) ghat(-lambda(y), rho' K~ a(y) u_y),  K~ = nK,
/// from u(0) = -(1 - e^x)+, together with the x-independent march from zero
/// data that yields u_tilde. The linear operator (including the mixed x-y
/// derivative) is solved implicitly as one sparse 2-D system per step; the
/// source is evaluated from the previous level, then corrected once.
/// Boundary conditions: Dirichlet u = -(1 - e^{x_lo}) + u_tilde at x_lo,
/// u = u_tilde at x_hi, homogeneous Neumann in y.
/// Throws NumericError on nodewise growth above 10x between steps (use a
/// finer nt) or on sparse-solve failure.
PdeSolution solve_value(const SvModel& model, const DriverSpec& driver,
                        const PutContract& contract, const GridSpec& grid,
                        const PdeScheme& scheme = {});

/// Merton component from the linear exponential transform: solves the f
/// equation with unit terminal data, y-drift m - (rho + eta rho') a lambda
/// and killing rate lambda^2 (1 - rho^2)/2, and returns
/// phi0 = -log f / (gamma (1 - rho^2)) as a [(nt+1) * ny] array. Equals
/// -K~ u_tilde from solve_value up to scheme tolerance. Requires |rho| < 1;
/// throws NumericError when the scheme loses positivity of f.
std::vector<double> merton_component_closed(const SvModel& model, double gamma,
                                            double eta, const GridSpec& grid,
                                            const PdeScheme& scheme = {});

/// Indifference price nK (u_tilde - u) at (tau, x, y), linear in tau and
/// bilinear in x, y; boundary values are reconstructed from the boundary
/// conditions. Throws ValidationError outside the grid.
double indifference_price(const PdeSolution& sol, double tau, double x, double y);

/// Per-unit-strike price u_tilde - u at (tau, x, y), same interpolation.
double unit_price(const PdeSolution& sol, double tau, double x, double y);

/// Inverts the unit-strike price to Black-Scholes implied vol at each x,
/// with bracket [sigma_low/2, 2 sigma_high]. Points whose price admits no
/// vol in the bracket are marked invalid instead of failing the curve.
VolCurve implied_vol_curve(const PdeSolution& sol, double tau, double y0,
                           const std::vector<double>& xs);

/// u_tilde_y - u_y at (tau, x, y) by central differences one grid spacing
/// wide. The point must be at least one spacing inside the y bounds.
double vega_gap(const PdeSolution& sol, double tau, double x, double y);

/// Writes every interior node as `tau,x,y,u,u_tilde,price` CSV rows.
void write_solution_csv(const PdeSolution& sol, std::ostream& os);

}  // namespace ivskew

#pragma once

namespace ivskew {

/// Parameters of the short-maturity Hull-White implied-vol expansion
/// I(tau, x, y) = i0(x,y) * (1 + tau * i1(x,y)), with cubic stock drift
/// mu(y) = mu_coeff * y^3.
struct HwAsymptoticParams {
    double kappa;     ///< vol-of-vol, > 0
    double mu_coeff;  ///< cubic drift coefficient
    double eta;       ///< distortion
    double y;         ///< current volatility level, > 0
    double tau;       ///< years to maturity, >= 0
};

/// psi(x,y) = asinh(kappa*x/y)/kappa; odd in x, zero at x=0.
double psi(double kappa, double x, double y);

/// Zeroth-order implied vol x/psi(x,y); even in x with limit y at x=0.
double i0(double kappa, double x, double y);

/// First-order coefficient
/// (1/psi^2) * [ln((y/x)*psi*(1+kappa^2 x^2/y^2)^(1/4)) + eta*mu*x^2/2],
/// with boundary value kappa^2/12 + eta*mu*y^2/2 at x=0.
double i1(double kappa, double mu_coeff, double eta, double x, double y);

/// First-order implied-vol approximation i0 * (1 + tau * i1).
double approx_vol(const HwAsymptoticParams& p, double x);

/// Central-difference residual of psi_x^2 + kappa^2 psi_y^2 - 1/y^2.
double eikonal_residual(double kappa, double x, double y, double h);

/// Central-difference residual of the first-order transport equation
/// satisfied by i1, evaluated with the closed forms for psi and i1.
double transport_residual(double kappa, double mu_coeff, double eta, double x,
                          double y, double h);

}  // namespace ivskew

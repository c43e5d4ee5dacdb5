#include "ivskew/asymptotics.hpp"

#include <cmath>

#include "ivskew/errors.hpp"

namespace ivskew {

double psi(double kappa, double x, double y) {
    if (y <= 0.0) throw ValidationError("psi: y must be positive");
    const double u = kappa * x / y;
    if (std::abs(u) < 1e-6) {
        return (x / y) * (1.0 - u * u / 6.0);
    }
    return std::asinh(u) / kappa;
}

double i0(double kappa, double x, double y) {
    if (y <= 0.0) throw ValidationError("i0: y must be positive");
    if (std::abs(x) < 1e-6 * y) return y;
    return x / psi(kappa, x, y);
}

double i1(double kappa, double mu_coeff, double eta, double x, double y) {
    if (y <= 0.0) throw ValidationError("i1: y must be positive");
    if (std::abs(x) < 1e-6 * y) {
        return kappa * kappa / 12.0 + 0.5 * eta * mu_coeff * y * y;
    }
    const double ps = psi(kappa, x, y);
    const double u = kappa * x / y;
    const double lg = std::log((y / x) * ps * std::pow(1.0 + u * u, 0.25));
    return (lg + 0.5 * eta * mu_coeff * x * x) / (ps * ps);
}

double approx_vol(const HwAsymptoticParams& p, double x) {
    if (p.kappa <= 0.0) throw ValidationError("approx_vol: kappa must be positive");
    if (p.tau < 0.0) throw ValidationError("approx_vol: tau must be nonnegative");
    return i0(p.kappa, x, p.y) *
           (1.0 + p.tau * i1(p.kappa, p.mu_coeff, p.eta, x, p.y));
}

double eikonal_residual(double kappa, double x, double y, double h) {
    if (x == 0.0) throw ValidationError("eikonal_residual: x must be nonzero");
    const double px = (psi(kappa, x + h, y) - psi(kappa, x - h, y)) / (2.0 * h);
    const double py = (psi(kappa, x, y + h) - psi(kappa, x, y - h)) / (2.0 * h);
    return px * px + kappa * kappa * py * py - 1.0 / (y * y);
}

double transport_residual(double kappa, double mu_coeff, double eta, double x,
                          double y, double h) {
    if (x == 0.0) throw ValidationError("transport_residual: x must be nonzero");
    const double ps = psi(kappa, x, y);
    const double px = (psi(kappa, x + h, y) - psi(kappa, x - h, y)) / (2.0 * h);
    const double py = (psi(kappa, x, y + h) - psi(kappa, x, y - h)) / (2.0 * h);

    auto i1v = [&](double xx, double yy) { return i1(kappa, mu_coeff, eta, xx, yy); };
    const double i1x = (i1v(x + h, y) - i1v(x - h, y)) / (2.0 * h);
    const double i1y = (i1v(x, y + h) - i1v(x, y - h)) / (2.0 * h);

    auto f = [&](double xx, double yy) { return xx / psi(kappa, xx, yy); };
    const double fxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
    const double fyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
    const double Mf = 0.5 * y * y * fxx + 0.5 * kappa * kappa * y * y * fyy;

    const double mu_y = mu_coeff * y * y * y;
    return 2.0 * i1v(x, y) + y * y * ps * px * i1x +
           kappa * kappa * y * y * ps * py * i1y - (ps / x) * Mf +
           eta * mu_y * py / ps;
}

}  // namespace ivskew

#include "ivskew/svmodels.hpp"

#include <cmath>
#include <sstream>

#include "ivskew/errors.hpp"

namespace ivskew {

double sharpe(const SvModel& model, double y) {
    const double s = model.sigma(y);
    if (s <= 0.0) {
        std::ostringstream os;
        os << "sharpe: sigma(" << y << ") = " << s << " is not positive";
        throw ValidationError(os.str());
    }
    return model.mu(y) / s;
}

SvModel make_hull_white(double mu_coeff, double kappa) {
    if (kappa <= 0.0) throw ValidationError("make_hull_white: kappa must be positive");
    SvModel md;
    md.mu = [mu_coeff](double y) { return mu_coeff * y * y * y; };
    md.sigma = [](double y) { return y; };
    md.m = [](double) { return 0.0; };
    md.a = [kappa](double y) { return kappa * y; };
    md.rho = 0.0;
    md.rhop = 1.0;
    md.sigma_low = 0.0;
    md.sigma_high = 0.0;
    md.y_work_lo = 0.01;
    md.y_work_hi = 3.0;
    md.asymptotics_only = true;
    md.name = "hull_white";
    return md;
}

namespace {

constexpr double kArctanSigmaLow = 0.03;
constexpr double kArctanSigmaHigh = 0.73;

double arctan_sigma(double y) {
    return 0.7 / M_PI * (std::atan(y - 1.0) + M_PI / 2.0) + 0.03;
}

}  // namespace

SvModel make_arctan_ou(double alpha, double mbar, double nu, double rho,
                       std::function<double(double)> mu) {
    if (alpha <= 0.0 || nu <= 0.0)
        throw ValidationError("make_arctan_ou: alpha and nu must be positive");
    if (!(std::abs(rho) < 1.0))
        throw ValidationError("make_arctan_ou: |rho| must be < 1");
    const double a_const = nu * std::sqrt(2.0 * alpha);
    SvModel md;
    md.mu = std::move(mu);
    md.sigma = arctan_sigma;
    md.m = [alpha, mbar](double y) { return alpha * (mbar - y); };
    md.a = [a_const](double) { return a_const; };
    md.rho = rho;
    md.rhop = std::sqrt(1.0 - rho * rho);
    md.sigma_low = kArctanSigmaLow;
    md.sigma_high = kArctanSigmaHigh;
    md.y_work_lo = -5.0;
    md.y_work_hi = 5.0;
    md.name = "arctan_ou";
    return md;
}

SvModel make_arctan_ou(double alpha, double mbar, double nu, double rho,
                       double mu0) {
    return make_arctan_ou(alpha, mbar, nu, rho,
                          [mu0](double y) {
                              const double s = arctan_sigma(y);
                              return mu0 * s * s;
                          });
}

SvModel make_const_sigma(double sigma_const, double a_const, double rho) {
    if (sigma_const <= 0.0)
        throw ValidationError("make_const_sigma: sigma must be positive");
    if (!(std::abs(rho) < 1.0))
        throw ValidationError("make_const_sigma: |rho| must be < 1");
    SvModel md;
    md.mu = [](double) { return 0.0; };
    md.sigma = [sigma_const](double) { return sigma_const; };
    md.m = [](double) { return 0.0; };
    md.a = [a_const](double) { return a_const; };
    md.rho = rho;
    md.rhop = std::sqrt(1.0 - rho * rho);
    md.sigma_low = sigma_const;
    md.sigma_high = sigma_const;
    md.y_work_lo = -5.0;
    md.y_work_hi = 5.0;
    md.name = "const_sigma";
    return md;
}

double solve_sigma_level(const SvModel& model, double target) {
    double lo = model.y_work_lo, hi = model.y_work_hi;
    double f_lo = model.sigma(lo) - target;
    double f_hi = model.sigma(hi) - target;
    if (f_lo * f_hi > 0.0)
        throw ValidationError("solve_sigma_level: target not bracketed on the working interval");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = model.sigma(mid) - target;
        if (f_lo * f_mid <= 0.0) { hi = mid; f_hi = f_mid; }
        else { lo = mid; f_lo = f_mid; }
        if (hi - lo < 1e-14) break;
    }
    return 0.5 * (lo + hi);
}

ValidationReport validate_assumptions(const SvModel& model, double y_lo,
                                      double y_hi, int resolution) {
    if (!(y_lo < y_hi) || !std::isfinite(y_lo) || !std::isfinite(y_hi))
        throw ValidationError("validate_assumptions: invalid interval");
    const int n = std::max(resolution, 3);
    const double dy = (y_hi - y_lo) / (n - 1);

    ValidationReport rep;
    rep.sigma_min = rep.a_min = 1e300;
    rep.sigma_max = -1e300;
    double prev_sigma = 0, prev_a = 0, prev_mu = 0, prev_m = 0;
    for (int i = 0; i < n; ++i) {
        const double y = y_lo + i * dy;
        const double sv = model.sigma(y), av = model.a(y);
        const double muv = model.mu(y), mv = model.m(y);
        if (!std::isfinite(sv) || !std::isfinite(av) || !std::isfinite(muv) ||
            !std::isfinite(mv)) {
            rep.issues.push_back("non-finite coefficient at y=" + std::to_string(y));
            continue;
        }
        rep.sigma_min = std::min(rep.sigma_min, sv);
        rep.sigma_max = std::max(rep.sigma_max, sv);
        rep.a_min = std::min(rep.a_min, av);
        if (i > 0) {
            for (double q : {std::abs(sv - prev_sigma), std::abs(av - prev_a),
                             std::abs(muv - prev_mu), std::abs(mv - prev_m)})
                rep.max_lipschitz = std::max(rep.max_lipschitz, q / dy);
        }
        prev_sigma = sv; prev_a = av; prev_mu = muv; prev_m = mv;
    }

    if (rep.sigma_min <= 0.0)
        rep.issues.push_back("sigma not bounded away from zero (min " +
                             std::to_string(rep.sigma_min) + ")");
    if (rep.a_min <= 0.0)
        rep.issues.push_back("a not positive (min " + std::to_string(rep.a_min) + ")");
    if (model.sigma_low > 0.0 && rep.sigma_min < model.sigma_low - 1e-12)
        rep.issues.push_back("sigma drops below declared lower bound");
    if (model.sigma_high > 0.0 && rep.sigma_max > model.sigma_high + 1e-12)
        rep.issues.push_back("sigma exceeds declared upper bound");

    rep.passed = rep.issues.empty() || model.asymptotics_only;
    if (model.asymptotics_only && !rep.issues.empty())
        rep.issues.push_back("model is flagged asymptotics-only; violations are expected");
    return rep;
}

SvModel model_from_json(const nlohmann::json& doc) {
    if (!doc.contains("family"))
        throw ValidationError("model_from_json: missing `family`");
    const std::string fam = doc.at("family").get<std::string>();
    try {
        if (fam == "arctan_ou") {
            return make_arctan_ou(doc.value("alpha", 5.0), doc.value("mbar", 0.0),
                                  doc.value("nu", 1.0), doc.value("rho", -0.2),
                                  doc.value("mu0", -1.0));
        }
        if (fam == "hull_white") {
            return make_hull_white(doc.value("mu", 6.0), doc.value("kappa", 7.0));
        }
        if (fam == "const_sigma") {
            return make_const_sigma(doc.value("sigma", 0.2), doc.value("a", 1.0),
                                    doc.value("rho", 0.0));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model_from_json: ") + e.what());
    }
    throw ValidationError("model_from_json: unknown family `" + fam + "`");
}

}  // namespace ivskew

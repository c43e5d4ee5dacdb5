#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivskew/asymptotics.hpp"
#include "ivskew/blackscholes.hpp"
#include "ivskew/calibrate.hpp"
#include "ivskew/errors.hpp"
#include "ivskew/parallel.hpp"
#include "ivskew/pdepricer.hpp"
#include "ivskew/riskdrivers.hpp"
#include "ivskew/svmodels.hpp"

using nlohmann::json;
using namespace ivskew;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    try {
        json doc;
        in >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw DataError("cannot parse config file " + path + ": " + e.what());
    }
}

double jnum(const json& j, const std::string& ctx, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ValidationError("config: missing or non-numeric field " + ctx + "." + key);
    return j.at(key).get<double>();
}

double jnum_or(const json& j, const std::string& ctx, const std::string& key,
               double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw ValidationError("config: non-numeric field " + ctx + "." + key);
    return j.at(key).get<double>();
}

const json& jobj(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_object())
        throw ValidationError("config: missing section `" + key + "`");
    return j.at(key);
}

void atomic_write(const std::string& out_path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path out(out_path);
    fs::path tmp(out);
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot write output file: " + tmp.string());
        os << content;
        os.flush();
        if (!os) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw DataError("write failed for output file: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, out, ec);
    if (ec) {
        std::error_code ec2;
        fs::remove(tmp, ec2);
        throw DataError("cannot move output into place: " + out.string());
    }
}

std::string format_csv(const std::string& header,
                       const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) os << ',';
            if (std::isnan(row[k]))
                os << "nan";
            else
                os << row[k];
        }
        os << '\n';
    }
    return os.str();
}

/// Everything a pricing run needs, validated before any computation.
struct PricingSetup {
    SvModel model;
    DriverSpec driver;
    PutContract contract{100.0, 0.25, 1};
    GridSpec grid;
    PdeScheme scheme;
    double y0 = 0.0;
    std::vector<double> xs;
    double q_tau = 0.0, q_x = 0.0, q_y = 0.0;
};

DriverSpec parse_driver(const json& doc) {
    const json& d = jobj(doc, "driver");
    const std::string family = d.value("family", std::string("distorted_entropic"));
    if (family == "distorted_entropic") {
        const double gamma = jnum(d, "driver", "gamma");
        const double eta = jnum_or(d, "driver", "eta", 0.0);
        if (gamma <= 0.0)
            throw ValidationError("config: driver.gamma must be positive");
        return DriverSpec::distorted_entropic(gamma, eta);
    }
    if (family == "tabulated") {
        if (!d.contains("table_csv") || !d.at("table_csv").is_string())
            throw ValidationError("config: tabulated driver needs driver.table_csv");
        return DriverSpec::tabulated(
            load_driver_table_csv(d.at("table_csv").get<std::string>()));
    }
    throw ValidationError("config: unknown driver.family `" + family + "`");
}

std::vector<double> parse_xs(const json& doc, const GridSpec& grid) {
    std::vector<double> xs;
    if (doc.contains("xs")) {
        const json& q = doc.at("xs");
        if (q.is_array()) {
            for (const auto& v : q) {
                if (!v.is_number())
                    throw ValidationError("config: xs entries must be numbers");
                xs.push_back(v.get<double>());
            }
        } else if (q.is_object()) {
            const double lo = jnum(q, "xs", "lo");
            const double hi = jnum(q, "xs", "hi");
            const int n = static_cast<int>(jnum(q, "xs", "n"));
            if (n < 2 || hi <= lo)
                throw ValidationError("config: xs needs lo < hi and n >= 2");
            for (int k = 0; k < n; ++k)
                xs.push_back(lo + (hi - lo) * k / (n - 1));
        } else {
            throw ValidationError("config: xs must be an array or {lo, hi, n}");
        }
    } else {
        for (int k = 0; k < 41; ++k) xs.push_back(-0.36 + 0.72 * k / 40.0);
    }
    if (xs.empty()) throw ValidationError("config: xs is empty");
    for (double x : xs)
        if (x <= grid.x_lo || x >= grid.x_hi)
            throw ValidationError("config: skew point outside the grid x range");
    return xs;
}

PricingSetup parse_pricing_config(const json& doc, bool need_xs, bool need_query) {
    PricingSetup s;
    s.model = model_from_json(jobj(doc, "model"));
    s.driver = parse_driver(doc);

    const json& c = jobj(doc, "contract");
    s.contract = PutContract(jnum(c, "contract", "strike"),
                             jnum(c, "contract", "maturity"),
                             static_cast<int>(jnum_or(c, "contract", "quantity", 1)));

    const json& g = jobj(doc, "grid");
    s.grid.x_lo = jnum(g, "grid", "x_lo");
    s.grid.x_hi = jnum(g, "grid", "x_hi");
    s.grid.y_lo = jnum(g, "grid", "y_lo");
    s.grid.y_hi = jnum(g, "grid", "y_hi");
    s.grid.nx = static_cast<int>(jnum(g, "grid", "nx"));
    s.grid.ny = static_cast<int>(jnum(g, "grid", "ny"));
    s.grid.nt = static_cast<int>(jnum(g, "grid", "nt"));
    s.grid.T = s.contract.maturity;
    s.grid.validate();

    if (doc.contains("scheme")) {
        const json& sc = doc.at("scheme");
        s.scheme.theta = jnum_or(sc, "scheme", "theta", s.scheme.theta);
        s.scheme.rannacher_steps = static_cast<int>(
            jnum_or(sc, "scheme", "rannacher_steps", s.scheme.rannacher_steps));
        s.scheme.correction = sc.value("correction", s.scheme.correction);
        s.scheme.include_stock_drift =
            sc.value("include_stock_drift", s.scheme.include_stock_drift);
    }
    s.scheme.validate();

    if (s.model.asymptotics_only)
        throw ValidationError("config: model `" + s.model.name +
                              "` is asymptotics-only and cannot be priced on a grid");
    {
        const ValidationReport rep =
            validate_assumptions(s.model, s.grid.y_lo, s.grid.y_hi);
        if (!rep.passed)
            throw ValidationError("config: model assumptions fail on the grid y range");
    }

    if (doc.contains("sigma0")) {
        s.y0 = solve_sigma_level(s.model, jnum(doc, "config", "sigma0"));
    } else {
        s.y0 = jnum(doc, "config", "y0");
    }
    if (s.y0 <= s.grid.y_lo || s.y0 >= s.grid.y_hi)
        throw ValidationError("config: y0 lies outside the grid y range");

    if (need_xs) s.xs = parse_xs(doc, s.grid);

    if (need_query) {
        const json& q = jobj(doc, "query");
        s.q_tau = jnum_or(q, "query", "tau", s.contract.maturity);
        s.q_x = jnum(q, "query", "x");
        s.q_y = jnum_or(q, "query", "y", s.y0);
        if (s.q_tau < 0.0 || s.q_tau > s.contract.maturity)
            throw ValidationError("config: query.tau must lie in [0, maturity]");
        if (s.q_x <= s.grid.x_lo || s.q_x >= s.grid.x_hi)
            throw ValidationError("config: query.x lies outside the grid x range");
        if (s.q_y <= s.grid.y_lo || s.q_y >= s.grid.y_hi)
            throw ValidationError("config: query.y lies outside the grid y range");
    }
    return s;
}

struct SweepSpec {
    std::string param;
    std::vector<std::string> tokens;
    std::vector<double> values;
};

SweepSpec parse_sweep(const std::string& spec) {
    SweepSpec sw;
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw ValidationError("sweep: expected <param>=<comma list>");
    sw.param = spec.substr(0, eq);
    if (sw.param != "gamma" && sw.param != "eta")
        throw ValidationError("sweep: parameter must be gamma or eta");
    std::istringstream ls(spec.substr(eq + 1));
    std::string tok;
    while (std::getline(ls, tok, ',')) {
        if (tok.empty()) continue;
        try {
            sw.values.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ValidationError("sweep: non-numeric value `" + tok + "`");
        }
        sw.tokens.push_back(tok);
    }
    if (sw.values.empty()) throw ValidationError("sweep: empty value list");
    return sw;
}

std::string sweep_file_name(const std::string& out_path, const std::string& param,
                            const std::string& token) {
    const std::filesystem::path out(out_path);
    std::filesystem::path named = out.parent_path() / out.stem();
    named += "_" + param + token;
    named += out.extension();
    return named.string();
}

std::string skew_csv(const PricingSetup& s) {
    const PdeSolution sol =
        solve_value(s.model, s.driver, s.contract, s.grid, s.scheme);
    const VolCurve curve =
        implied_vol_curve(sol, s.grid.T, s.y0, s.xs);
    std::vector<std::vector<double>> rows;
    for (const VolPoint& p : curve.points)
        rows.push_back({p.x, p.valid ? p.vol : std::nan("")});
    return format_csv("log_moneyness,implied_vol", rows);
}

int run_skew(const std::string& config_path, const std::string& out_path,
             const std::string& sweep_spec) {
    if (config_path.empty()) throw ValidationError("skew: --config is required");
    if (out_path.empty()) throw ValidationError("skew: --out is required");
    const json doc = read_json_file(config_path);
    const PricingSetup base = parse_pricing_config(doc, true, false);

    if (sweep_spec.empty()) {
        atomic_write(out_path, skew_csv(base));
        return 0;
    }

    const SweepSpec sw = parse_sweep(sweep_spec);
    if (base.driver.family != DriverSpec::Family::DistortedEntropic)
        throw ValidationError("sweep: only the distorted-entropic driver has " +
                              sw.param + " to sweep");
    for (double v : sw.values)
        if (sw.param == "gamma" && v <= 0.0)
            throw ValidationError("sweep: gamma values must be positive");

    const int n = static_cast<int>(sw.values.size());
    std::vector<std::string> contents(n);
    std::vector<std::exception_ptr> errors(n);
    parallel_for(n, [&](int i) {
        try {
            PricingSetup leg = base;
            if (sw.param == "gamma")
                leg.driver.gamma = sw.values[i];
            else
                leg.driver.eta = sw.values[i];
            contents[i] = skew_csv(leg);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    for (int i = 0; i < n; ++i)
        atomic_write(sweep_file_name(out_path, sw.param, sw.tokens[i]), contents[i]);
    return 0;
}

int run_asymptotic(const std::string& config_path, const std::string& out_path) {
    if (out_path.empty()) throw ValidationError("asymptotic: --out is required");
    json doc = json::object();
    if (!config_path.empty()) doc = read_json_file(config_path);

    const double kappa = jnum_or(doc, "config", "kappa", 7.0);
    const double mu = jnum_or(doc, "config", "mu", 6.0);
    const double y = jnum_or(doc, "config", "y", 0.3);
    const double tau = jnum_or(doc, "config", "tau", 0.1);
    std::vector<double> etas{0.0, 0.2, 0.4};
    if (doc.contains("etas")) {
        etas.clear();
        for (const auto& v : doc.at("etas")) {
            if (!v.is_number())
                throw ValidationError("config: etas entries must be numbers");
            etas.push_back(v.get<double>());
        }
        if (etas.empty()) throw ValidationError("config: etas is empty");
    }
    const double x_lo = jnum_or(doc, "config", "x_lo", -0.5);
    const double x_hi = jnum_or(doc, "config", "x_hi", 0.5);
    const int n = static_cast<int>(jnum_or(doc, "config", "n", 101));
    if (n < 2 || x_hi <= x_lo)
        throw ValidationError("config: need x_lo < x_hi and n >= 2");
    if (y <= 0.0) throw ValidationError("config: y must be positive");
    if (kappa <= 0.0) throw ValidationError("config: kappa must be positive");
    if (tau < 0.0) throw ValidationError("config: tau must be nonnegative");

    std::vector<std::vector<double>> rows;
    for (double eta : etas) {
        const HwAsymptoticParams p{kappa, mu, eta, y, tau};
        for (int k = 0; k < n; ++k) {
            const double x = x_lo + (x_hi - x_lo) * k / (n - 1);
            rows.push_back({eta, x, approx_vol(p, x)});
        }
    }
    atomic_write(out_path, format_csv("eta,log_moneyness,approx_vol", rows));
    return 0;
}

int run_calibrate(const std::string& quotes_path, const std::string& out_path,
                  double split_x) {
    if (quotes_path.empty())
        throw ValidationError("calibrate: --config must name the quotes CSV");
    if (out_path.empty()) throw ValidationError("calibrate: --out is required");

    const std::vector<MarketQuote> quotes = load_quotes_csv(quotes_path);
    long n_positive = 0;
    for (const auto& q : quotes)
        if (q.x > 0.0) ++n_positive;

    const CalibrationResult res = calibrate(quotes, split_x);

    json out;
    out["kappa_hat"] = res.kappa_hat;
    out["y_hat"] = res.y_hat;
    out["mu_eta_hat"] = res.mu_eta_hat;
    out["split_x"] = res.split_x;
    out["rmse_stage1"] = res.rmse_stage1;
    out["rmse_stage2"] = res.rmse_stage2;
    out["n_quotes_stage1"] = res.n_quotes_stage1;
    out["n_quotes_stage2"] = res.n_quotes_stage2;
    out["boundary_flag"] = res.boundary_flag;
    out["n_positive_x_ignored"] = n_positive;
    atomic_write(out_path, out.dump(2) + "\n");

    std::vector<std::vector<double>> rows;
    for (const auto& q : quotes) {
        if (q.x > 0.0) continue;
        double fitted = model_vol_im(res.kappa_hat, res.y_hat, q.tau, q.x);
        if (q.x < res.split_x)
            fitted += res.mu_eta_hat *
                      wing_regressor(res.kappa_hat, res.y_hat, q.tau, q.x);
        rows.push_back({q.x, q.vol, fitted});
    }
    const std::filesystem::path outp(out_path);
    std::filesystem::path fit = outp.parent_path() / outp.stem();
    fit += "_fit.csv";
    atomic_write(fit.string(),
                 format_csv("log_moneyness,implied_vol,fitted_vol", rows));

    if (n_positive > 0)
        std::cout << "warning: ignored " << n_positive
                  << " quotes with positive log-moneyness\n";
    return 0;
}

json default_check_config() {
    json doc;
    doc["model"] = {{"family", "arctan_ou"}};
    doc["driver"] = {{"gamma", 0.5}, {"eta", 0.2}};
    doc["contract"] = {{"strike", 100.0}, {"maturity", 0.25}};
    doc["grid"] = {{"x_lo", -2.0}, {"x_hi", 2.0}, {"y_lo", -4.0}, {"y_hi", 4.0},
                   {"nx", 49},     {"ny", 31},    {"nt", 32}};
    doc["sigma0"] = 0.223;
    return doc;
}

int run_check(const std::string& config_path) {
    const json doc =
        config_path.empty() ? default_check_config() : read_json_file(config_path);

    struct Row {
        std::string name;
        bool pass;
        std::string note;
    };
    std::vector<Row> rows;

    DriverSpec driver = DriverSpec::distorted_entropic(1.0, 0.0);
    bool have_driver = false;
    try {
        driver = parse_driver(doc);
        const Lattice lat{-2.0, 2.0, -2.0, 2.0, 21, 21};
        const AdmissibilityReport rep = check_strictly_quadratic(driver, lat);
        rows.push_back({"driver admissibility", rep.all_pass(), rep.notes});
        have_driver = rep.all_pass();
    } catch (const Error& e) {
        rows.push_back({"driver admissibility", false, e.what()});
    }

    try {
        const SvModel model = model_from_json(jobj(doc, "model"));
        const json& g = jobj(doc, "grid");
        const ValidationReport rep = validate_assumptions(
            model, jnum(g, "grid", "y_lo"), jnum(g, "grid", "y_hi"));
        std::string note;
        for (const auto& is : rep.issues) note += (note.empty() ? "" : "; ") + is;
        rows.push_back({"model assumptions", rep.passed, note});
    } catch (const Error& e) {
        rows.push_back({"model assumptions", false, e.what()});
    }

    try {
        if (!have_driver) throw ValidationError("skipped: driver check failed");
        PricingSetup s = parse_pricing_config(doc, false, false);
        s.grid.nx = std::min(s.grid.nx, 49);
        s.grid.ny = std::min(s.grid.ny, 31);
        s.grid.nt = std::min(s.grid.nt, 32);
        const PdeSolution sol =
            solve_value(s.model, s.driver, s.contract, s.grid, s.scheme);
        const double Ktil = s.contract.k_tilde();
        double p_min = 1e300;
        for (int n = 0; n <= s.grid.nt; ++n)
            for (int i = 0; i < s.grid.nx; ++i)
                for (int j = 0; j < s.grid.ny; ++j)
                    p_min = std::min(p_min, Ktil * (sol.u_tilde_at(n, j) -
                                                    sol.u_at(n, i, j)));
        bool env_ok = p_min > -1e-8 * Ktil;
        const auto xs = s.grid.x_nodes();
        for (int i = 0; i < s.grid.nx; i += 4) {
            const double p = unit_price(sol, s.grid.T, xs[i], s.y0);
            if (p < bs_put(s.grid.T, xs[i], sol.sigma_low) - 1e-4 ||
                p > bs_put(s.grid.T, xs[i], sol.sigma_high) + 1e-4)
                env_ok = false;
        }
        std::ostringstream note;
        note << std::setprecision(3) << "min price " << p_min;
        rows.push_back({"price envelope", env_ok, note.str()});
    } catch (const Error& e) {
        rows.push_back({"price envelope", false, e.what()});
    }

    try {
        double worst_eik = 0.0, worst_tra = 0.0;
        for (double sx : {-1.0, 1.0})
            for (double ax : {0.3, 0.45, 0.6})
                for (double y : {0.35, 0.5}) {
                    const double x = sx * ax;
                    worst_eik = std::max(worst_eik,
                                         std::abs(eikonal_residual(7.0, x, y, 1e-5)));
                    for (double eta : {0.0, 0.2})
                        worst_tra = std::max(
                            worst_tra,
                            std::abs(transport_residual(7.0, 6.0, eta, x, y, 1e-4)));
                }
        const bool ok = worst_eik < 1e-8 && worst_tra < 1e-5;
        std::ostringstream note;
        note << std::setprecision(3) << "eikonal " << worst_eik << ", transport "
             << worst_tra;
        rows.push_back({"expansion residuals", ok, note.str()});
    } catch (const Error& e) {
        rows.push_back({"expansion residuals", false, e.what()});
    }

    bool all = true;
    for (const Row& r : rows) {
        all = all && r.pass;
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name;
        if (!r.note.empty()) std::cout << "  (" << r.note << ")";
        std::cout << '\n';
    }
    return all ? 0 : 2;
}

int run_price(const std::string& config_path, const std::string& out_path) {
    if (config_path.empty()) throw ValidationError("price: --config is required");
    const json doc = read_json_file(config_path);
    const PricingSetup s = parse_pricing_config(doc, false, true);

    const PdeSolution sol =
        solve_value(s.model, s.driver, s.contract, s.grid, s.scheme);
    const double price = indifference_price(sol, s.q_tau, s.q_x, s.q_y);
    const double per_unit = unit_price(sol, s.q_tau, s.q_x, s.q_y);

    json out;
    out["tau"] = s.q_tau;
    out["x"] = s.q_x;
    out["y"] = s.q_y;
    out["price"] = price;
    out["unit_price"] = per_unit;
    out["k_tilde"] = s.contract.k_tilde();
    const std::string body = out.dump(2) + "\n";
    if (out_path.empty())
        std::cout << body;
    else
        atomic_write(out_path, body);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Indifference prices and implied-vol skews for European puts "
                 "under stochastic-volatility models with convex risk measures"};
    app.require_subcommand(1);

    std::string config_path, out_path, sweep_spec;
    double split_x = -0.06;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config path");
        sub->add_option("--out", out_path, "output file path");
        sub->add_option("--seed", seed, "RNG seed for stochastic components");
    };

    CLI::App* skew = app.add_subcommand(
        "skew", "price a put grid and write an implied-vol curve");
    add_common(skew);
    skew->add_option("--sweep", sweep_spec,
                     "sweep gamma or eta: <param>=<comma list>, one file per value");

    CLI::App* asym = app.add_subcommand(
        "asymptotic", "evaluate the short-maturity skew expansion");
    add_common(asym);

    CLI::App* cal = app.add_subcommand(
        "calibrate", "fit (kappa, y) and mu*eta to a quote CSV");
    add_common(cal);
    cal->add_option("--split-x", split_x,
                    "boundary between near-money and wing quotes");

    CLI::App* chk = app.add_subcommand(
        "check", "run driver, model, envelope and residual diagnostics");
    add_common(chk);

    CLI::App* prc = app.add_subcommand(
        "price", "indifference price at a single (tau, x, y) point");
    add_common(prc);

    int rc = 0;
    skew->callback([&] { rc = run_skew(config_path, out_path, sweep_spec); });
    asym->callback([&] { rc = run_asymptotic(config_path, out_path); });
    cal->callback([&] { rc = run_calibrate(config_path, out_path, split_x); });
    chk->callback([&] { rc = run_check(config_path); });
    prc->callback([&] { rc = run_price(config_path, out_path); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return rc;
}

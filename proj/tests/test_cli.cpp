#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "ivskew/calibrate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "ivskew_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliResult run_cli(const std::string& args) {
    const fs::path log = work_dir() / "cli_output.txt";
    const std::string cmd =
        std::string(IVSKEW_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream os;
    os << in.rdbuf();
    res.output = os.str();
    return res;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p);
    out << body;
}

std::string small_config(const std::string& extra = "") {
    return std::string(R"({
  "model": {"family": "arctan_ou"},
  "driver": {"gamma": 0.5, "eta": 0.2},
  "contract": {"strike": 100.0, "maturity": 0.25},
  "grid": {"x_lo": -2.0, "x_hi": 2.0, "y_lo": -4.0, "y_hi": 4.0,
           "nx": 25, "ny": 15, "nt": 16},
  "sigma0": 0.223,
  "xs": {"lo": -0.2, "hi": 0.1, "n": 5})") +
           (extra.empty() ? "" : ",\n" + extra) + "\n}\n";
}

}  // namespace

TEST_CASE("check subcommand prints a passing table") {
    const CliResult res = run_cli("check");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("PASS  driver admissibility") != std::string::npos);
    CHECK(res.output.find("PASS  model assumptions") != std::string::npos);
    CHECK(res.output.find("PASS  price envelope") != std::string::npos);
    CHECK(res.output.find("PASS  expansion residuals") != std::string::npos);
    CHECK(res.output.find("FAIL") == std::string::npos);
}

TEST_CASE("check reports a failing driver without aborting the table") {
    const fs::path cfg = work_dir() / "check_badgamma.json";
    write_file(cfg, R"({
  "model": {"family": "arctan_ou"},
  "driver": {"gamma": -1.0, "eta": 0.0},
  "contract": {"strike": 100.0, "maturity": 0.25},
  "grid": {"x_lo": -2.0, "x_hi": 2.0, "y_lo": -4.0, "y_hi": 4.0,
           "nx": 25, "ny": 15, "nt": 16},
  "sigma0": 0.223
})");
    const CliResult res = run_cli("check --config " + cfg.string());
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("FAIL  driver admissibility") != std::string::npos);
    CHECK(res.output.find("model assumptions") != std::string::npos);
}

TEST_CASE("skew writes a deterministic curve file") {
    const fs::path cfg = work_dir() / "skew.json";
    write_file(cfg, small_config());
    const fs::path out1 = work_dir() / "curve1.csv";
    const fs::path out2 = work_dir() / "curve2.csv";

    CHECK(run_cli("skew --config " + cfg.string() + " --out " + out1.string())
              .exit_code == 0);
    CHECK(run_cli("skew --config " + cfg.string() + " --out " + out2.string())
              .exit_code == 0);

    const std::string a = slurp(out1);
    CHECK(a == slurp(out2));
    CHECK(a.rfind("log_moneyness,implied_vol\n", 0) == 0);
    CHECK(std::count(a.begin(), a.end(), '\n') == 6);
    CHECK_FALSE(fs::exists(out1.string() + ".tmp"));
}

TEST_CASE("skew sweep writes one file per value") {
    const fs::path cfg = work_dir() / "skew_sweep.json";
    write_file(cfg, small_config());
    const fs::path out = work_dir() / "sweep.csv";
    const CliResult res = run_cli("skew --config " + cfg.string() + " --out " +
                                  out.string() + " --sweep eta=0,0.2");
    CHECK(res.exit_code == 0);
    CHECK_FALSE(fs::exists(out));
    const fs::path f0 = work_dir() / "sweep_eta0.csv";
    const fs::path f2 = work_dir() / "sweep_eta0.2.csv";
    REQUIRE(fs::exists(f0));
    REQUIRE(fs::exists(f2));
    CHECK(slurp(f0).rfind("log_moneyness,implied_vol\n", 0) == 0);
    CHECK(slurp(f0) != slurp(f2));

    SUBCASE("bad sweep parameters are refused") {
        CHECK(run_cli("skew --config " + cfg.string() + " --out " + out.string() +
                      " --sweep theta=0.5")
                  .exit_code == 2);
        CHECK(run_cli("skew --config " + cfg.string() + " --out " + out.string() +
                      " --sweep eta=abc")
                  .exit_code == 2);
    }
}

TEST_CASE("missing config fields fail before any output is written") {
    const fs::path cfg = work_dir() / "missing_nx.json";
    write_file(cfg, R"({
  "model": {"family": "arctan_ou"},
  "driver": {"gamma": 0.5, "eta": 0.2},
  "contract": {"strike": 100.0, "maturity": 0.25},
  "grid": {"x_lo": -2.0, "x_hi": 2.0, "y_lo": -4.0, "y_hi": 4.0,
           "ny": 15, "nt": 16},
  "sigma0": 0.223
})");
    const fs::path out = work_dir() / "never.csv";
    const CliResult res =
        run_cli("skew --config " + cfg.string() + " --out " + out.string());
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("grid.nx") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
    CHECK_FALSE(fs::exists(out.string() + ".tmp"));
}

TEST_CASE("asymptotics-only models are refused for grid pricing") {
    const fs::path cfg = work_dir() / "hw.json";
    write_file(cfg, R"({
  "model": {"family": "hull_white"},
  "driver": {"gamma": 0.5, "eta": 0.2},
  "contract": {"strike": 100.0, "maturity": 0.25},
  "grid": {"x_lo": -2.0, "x_hi": 2.0, "y_lo": -4.0, "y_hi": 4.0,
           "nx": 25, "ny": 15, "nt": 16},
  "y0": 0.3
})");
    const CliResult res = run_cli("skew --config " + cfg.string() + " --out " +
                                  (work_dir() / "hw.csv").string());
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("asymptotics-only") != std::string::npos);
}

TEST_CASE("numeric failures map to exit code 3") {
    const fs::path cfg = work_dir() / "unstable.json";
    write_file(cfg, R"({
  "model": {"family": "arctan_ou"},
  "driver": {"gamma": 0.5, "eta": 0.2},
  "contract": {"strike": 100.0, "maturity": 0.25},
  "grid": {"x_lo": -1.0, "x_hi": 1.0, "y_lo": -4.0, "y_hi": 4.0,
           "nx": 99, "ny": 31, "nt": 8},
  "scheme": {"theta": 0.0, "rannacher_steps": 0},
  "sigma0": 0.223,
  "xs": [-0.1, 0.0]
})");
    const CliResult res = run_cli("skew --config " + cfg.string() + " --out " +
                                  (work_dir() / "unstable.csv").string());
    CHECK(res.exit_code == 3);
    CHECK(res.output.find("instability") != std::string::npos);
}

TEST_CASE("asymptotic subcommand") {
    const fs::path out = work_dir() / "asym.csv";
    CHECK(run_cli("asymptotic --out " + out.string()).exit_code == 0);
    const std::string body = slurp(out);
    CHECK(body.rfind("eta,log_moneyness,approx_vol\n", 0) == 0);
    CHECK(std::count(body.begin(), body.end(), '\n') == 1 + 3 * 101);

    SUBCASE("negative y is rejected") {
        const fs::path cfg = work_dir() / "asym_bad.json";
        write_file(cfg, R"({"y": -0.3})");
        CHECK(run_cli("asymptotic --config " + cfg.string() + " --out " +
                      out.string())
                  .exit_code == 2);
    }
    SUBCASE("zero maturity reduces to the zeroth order") {
        const fs::path cfg = work_dir() / "asym_tau0.json";
        write_file(cfg, R"({"tau": 0.0, "etas": [0.0, 0.4], "n": 11})");
        const fs::path o2 = work_dir() / "asym_tau0.csv";
        CHECK(run_cli("asymptotic --config " + cfg.string() + " --out " +
                      o2.string())
                  .exit_code == 0);
        std::ifstream in(o2);
        std::string header, line;
        std::getline(in, header);
        int atm_rows = 0;
        while (std::getline(in, line)) {
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            double eta, x, vol;
            ls >> eta >> x >> vol;
            if (x == 0.0) {
                ++atm_rows;
                CHECK(vol == doctest::Approx(0.3).epsilon(1e-12));
            }
        }
        CHECK(atm_rows == 2);
    }
}

TEST_CASE("calibrate round trip through files") {
    using namespace ivskew;
    const double kappa = 6.6, y = 0.18, mu_eta = 35.0, tau = 9.0 / 365.0;
    std::ostringstream csv;
    csv << std::setprecision(17) << "tau,log_moneyness,implied_vol\n";
    for (int k = 0; k <= 12; ++k) {
        const double x = -0.06 + 0.005 * k;
        csv << tau << ',' << x << ',' << model_vol_im(kappa, y, tau, x) << '\n';
    }
    for (int k = 0; k < 19; ++k) {
        const double x = -0.25 + 0.01 * k;
        csv << tau << ',' << x << ','
            << model_vol_im(kappa, y, tau, x) +
                   mu_eta * wing_regressor(kappa, y, tau, x)
            << '\n';
    }
    csv << tau << ",0.08,0.5\n";
    const fs::path quotes = work_dir() / "quotes.csv";
    write_file(quotes, csv.str());

    const fs::path out = work_dir() / "cal.json";
    const CliResult res =
        run_cli("calibrate --config " + quotes.string() + " --out " + out.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("ignored 1 quotes") != std::string::npos);

    const json doc = json::parse(slurp(out));
    CHECK(doc.at("kappa_hat").get<double>() == doctest::Approx(kappa).epsilon(1e-6));
    CHECK(doc.at("y_hat").get<double>() == doctest::Approx(y).epsilon(1e-6));
    CHECK(doc.at("mu_eta_hat").get<double>() ==
          doctest::Approx(mu_eta).epsilon(1e-6));
    CHECK(doc.at("boundary_flag").get<bool>() == false);
    CHECK(doc.at("n_positive_x_ignored").get<int>() == 1);

    const fs::path fit = work_dir() / "cal_fit.csv";
    REQUIRE(fs::exists(fit));
    const std::string fit_body = slurp(fit);
    CHECK(fit_body.rfind("log_moneyness,implied_vol,fitted_vol\n", 0) == 0);
    CHECK(std::count(fit_body.begin(), fit_body.end(), '\n') == 1 + 32);

    SUBCASE("malformed quote rows name the line") {
        const fs::path bad = work_dir() / "bad_quotes.csv";
        write_file(bad, "tau,log_moneyness,implied_vol\n0.05,-0.1,0.2\n0.05,oops,0.2\n");
        const CliResult r =
            run_cli("calibrate --config " + bad.string() + " --out " + out.string());
        CHECK(r.exit_code == 4);
        CHECK(r.output.find("line 3") != std::string::npos);
    }
    SUBCASE("an empty chain cannot be fitted") {
        const fs::path empty = work_dir() / "empty_quotes.csv";
        write_file(empty, "tau,log_moneyness,implied_vol\n");
        const CliResult r = run_cli("calibrate --config " + empty.string() +
                                    " --out " + out.string());
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("price point query") {
    const fs::path cfg = work_dir() / "price.json";
    write_file(cfg, small_config(R"(  "query": {"tau": 0.25, "x": -0.1})"));
    const CliResult res = run_cli("price --config " + cfg.string());
    CHECK(res.exit_code == 0);
    const json doc = json::parse(res.output);
    CHECK(doc.at("price").get<double>() > 0.0);
    CHECK(doc.at("price").get<double>() ==
          doctest::Approx(100.0 * doc.at("unit_price").get<double>())
              .epsilon(1e-12));
    CHECK(doc.at("k_tilde").get<double>() == 100.0);

    SUBCASE("query outside the grid is rejected up front") {
        const fs::path bad = work_dir() / "price_bad.json";
        write_file(bad, small_config(R"(  "query": {"tau": 0.25, "x": 2.5})"));
        CHECK(run_cli("price --config " + bad.string()).exit_code == 2);
    }
}

#include "ivskew/riskdrivers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ivskew/errors.hpp"

namespace ivskew {

DriverSpec DriverSpec::distorted_entropic(double gamma, double eta) {
    if (gamma <= 0.0) throw ValidationError("DriverSpec: gamma must be positive");
    DriverSpec d;
    d.family = Family::DistortedEntropic;
    d.gamma = gamma;
    d.eta = eta;
    return d;
}

DriverSpec DriverSpec::tabulated(DriverTable table) {
    if (table.z1s.size() < 2 || table.z2s.size() < 2)
        throw ValidationError("DriverSpec: table needs at least a 2x2 grid");
    for (std::size_t i = 1; i < table.z1s.size(); ++i)
        if (table.z1s[i] <= table.z1s[i - 1])
            throw ValidationError("DriverSpec: z1 axis not strictly increasing");
    for (std::size_t j = 1; j < table.z2s.size(); ++j)
        if (table.z2s[j] <= table.z2s[j - 1])
            throw ValidationError("DriverSpec: z2 axis not strictly increasing");
    for (double v : table.g)
        if (!std::isfinite(v))
            throw ValidationError("DriverSpec: non-finite table value");
    DriverSpec d;
    d.family = Family::GenericTabulated;
    d.table = std::move(table);
    return d;
}

ConjugateDriver ConjugateDriver::closed_form(DriverSpec d) {
    if (d.family != DriverSpec::Family::DistortedEntropic)
        throw ValidationError("ConjugateDriver: closed form requires the distorted-entropic family");
    ConjugateDriver c;
    c.source = std::move(d);
    c.mode = Mode::ClosedForm;
    return c;
}

ConjugateDriver ConjugateDriver::numeric_sup(DriverSpec d, int sup_nodes) {
    if (sup_nodes < 5) throw ValidationError("ConjugateDriver: sup grid too small");
    ConjugateDriver c;
    c.source = std::move(d);
    c.mode = Mode::NumericSup;
    c.sup_nodes = sup_nodes;
    return c;
}

double eval_driver(const DriverSpec& d, double z1, double z2) {
    if (d.family == DriverSpec::Family::DistortedEntropic) {
        const double s = z1 + d.eta * z2;
        return 0.5 * d.gamma * (s * s + z2 * z2);
    }
    const auto& t = d.table;
    if (z1 < t.z1s.front() || z1 > t.z1s.back() ||
        z2 < t.z2s.front() || z2 > t.z2s.back())
        throw ValidationError("eval_driver: input outside tabulated grid");
    auto cell = [](const std::vector<double>& ax, double v) {
        auto it = std::upper_bound(ax.begin(), ax.end(), v);
        std::size_t i = static_cast<std::size_t>(it - ax.begin());
        if (i == 0) i = 1;
        if (i == ax.size()) i = ax.size() - 1;
        return i - 1;
    };
    const std::size_t i = cell(t.z1s, z1), j = cell(t.z2s, z2);
    const double tx = (z1 - t.z1s[i]) / (t.z1s[i + 1] - t.z1s[i]);
    const double ty = (z2 - t.z2s[j]) / (t.z2s[j + 1] - t.z2s[j]);
    return (1 - tx) * (1 - ty) * t.at(i, j) + tx * (1 - ty) * t.at(i + 1, j) +
           (1 - tx) * ty * t.at(i, j + 1) + tx * ty * t.at(i + 1, j + 1);
}

namespace {

/// Lattice-estimated curvature of g in z1, used to center the sup window.
double estimate_z1_curvature(const DriverSpec& d) {
    if (d.family == DriverSpec::Family::DistortedEntropic) {
        const double h = 0.5;
        const double c = (eval_driver(d, h, 0.0) - 2.0 * eval_driver(d, 0.0, 0.0) +
                          eval_driver(d, -h, 0.0)) / (h * h);
        return std::max(c, 1e-8);
    }
    const auto& ax = d.table.z1s;
    const double mid = 0.5 * (ax.front() + ax.back());
    const double h = std::max((ax.back() - ax.front()) / 8.0, 1e-6);
    const double z2c = 0.5 * (d.table.z2s.front() + d.table.z2s.back());
    const double c = (eval_driver(d, mid + h, z2c) - 2.0 * eval_driver(d, mid, z2c) +
                      eval_driver(d, mid - h, z2c)) / (h * h);
    return std::max(c, 1e-8);
}

double golden_max(const DriverSpec& d, double zeta, double z2,
                  double a, double b, double tol) {
    static const double inv_phi = 0.6180339887498949;
    auto f = [&](double z1) { return zeta * z1 - eval_driver(d, z1, z2); };
    double c = b - inv_phi * (b - a);
    double e = a + inv_phi * (b - a);
    double fc = f(c), fe = f(e);
    while (b - a > tol) {
        if (fc > fe) {
            b = e; e = c; fe = fc;
            c = b - inv_phi * (b - a); fc = f(c);
        } else {
            a = c; c = e; fc = fe;
            e = a + inv_phi * (b - a); fe = f(e);
        }
    }
    const double z1 = 0.5 * (a + b);
    return f(z1);
}

}  // namespace

double conjugate(const ConjugateDriver& c, double zeta, double z2) {
    const DriverSpec& d = c.source;
    if (c.mode == ConjugateDriver::Mode::ClosedForm) {
        return zeta * zeta / (2.0 * d.gamma) - 0.5 * d.gamma * z2 * z2 -
               d.eta * zeta * z2;
    }
    const double chat = estimate_z1_curvature(d);
    double lo = zeta / chat - 10.0, hi = zeta / chat + 10.0;
    if (d.family == DriverSpec::Family::GenericTabulated) {
        lo = std::max(lo, d.table.z1s.front());
        hi = std::min(hi, d.table.z1s.back());
        if (!(lo < hi))
            throw ValidationError("conjugate: table does not cover the sup window");
    }
    const int n = c.sup_nodes;
    const double dz = (hi - lo) / (n - 1);
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        const double z1 = lo + k * dz;
        const double v = zeta * z1 - eval_driver(d, z1, z2);
        if (v > best_val) { best_val = v; best = k; }
    }
    if (best == 0 || best == n - 1) {
        std::ostringstream os;
        os << "conjugate: sup attained on the search-window boundary at zeta="
           << zeta << ", z2=" << z2 << " (inconclusive sup; window too narrow)";
        throw NumericError(os.str());
    }
    return golden_max(d, zeta, z2, lo + (best - 1) * dz, lo + (best + 1) * dz, 1e-10);
}

double conjugate_slope_at_zero(const ConjugateDriver& c, double zeta, double h) {
    if (c.mode == ConjugateDriver::Mode::ClosedForm)
        return -c.source.eta * zeta;
    const double up = conjugate(c, zeta, h);
    const double dn = conjugate(c, zeta, -h);
    const double slope = (up - dn) / (2.0 * h);
    if (!std::isfinite(slope))
        throw NumericError("conjugate_slope_at_zero: non-finite finite difference");
    return slope;
}

AdmissibilityReport check_strictly_quadratic(const DriverSpec& d,
                                             const Lattice& lat) {
    AdmissibilityReport rep;
    const int n1 = std::max(lat.n1, 3), n2 = std::max(lat.n2, 3);
    const double d1 = (lat.z1_hi - lat.z1_lo) / (n1 - 1);
    const double d2 = (lat.z2_hi - lat.z2_lo) / (n2 - 1);

    auto run_lattice_tests = [&](auto&& g, bool& norm_ok, bool& conv_ok,
                                 bool& strict_ok, double& c1, double& c2) {
        norm_ok = std::abs(g(0.0, 0.0)) < 1e-12;
        conv_ok = true;
        double min_curv = std::numeric_limits<double>::infinity();
        c1 = 0.0;
        c2 = 0.0;
        for (int j = 0; j < n2; ++j) {
            const double z2 = lat.z2_lo + j * d2;
            for (int i = 0; i < n1; ++i) {
                const double z1 = lat.z1_lo + i * d1;
                const double gv = g(z1, z2);
                if (i > 0 && i < n1 - 1) {
                    const double curv =
                        (g(z1 + d1, z2) - 2.0 * gv + g(z1 - d1, z2)) / (d1 * d1);
                    if (curv < -1e-9) conv_ok = false;
                    min_curv = std::min(min_curv, curv);
                }
                const double w = 1.0 + z2 * z2;
                c1 = std::max(c1, (-gv + std::sqrt(gv * gv + w * z1 * z1)) / (2.0 * w));
                c2 = std::max(c2, gv / (1.0 + z1 * z1 + z2 * z2));
            }
        }
        strict_ok = min_curv > 1e-9;
    };

    run_lattice_tests([&](double a, double b) { return eval_driver(d, a, b); },
                      rep.normalization_ok, rep.convexity_z1_ok,
                      rep.strict_curvature_ok, rep.c1, rep.c2);
    rep.bounds_ok = std::isfinite(rep.c1) && std::isfinite(rep.c2) && rep.c1 >= 0.0;

    ConjugateDriver num = ConjugateDriver::numeric_sup(d);
    try {
        bool cn, cc, cs;
        double cc1, cc2;
        run_lattice_tests([&](double a, double b) { return conjugate(num, a, b); },
                          cn, cc, cs, cc1, cc2);
        const bool cb = std::isfinite(cc1) && std::isfinite(cc2) && cc1 >= 0.0;
        rep.conjugate_ok = cn && cc && cb;
        if (!rep.conjugate_ok) rep.notes = "conjugate failed a lattice condition";
    } catch (const Error& e) {
        rep.conjugate_ok = false;
        rep.notes = std::string("conjugate lower-bound condition failed: ") + e.what();
    }
    return rep;
}

DriverTable load_driver_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open driver table: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty driver table: " + path);
    auto strip = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
    };
    if (strip(line) != "z1,z2,g")
        throw DataError("driver table header must be `z1,z2,g`: " + path);

    std::map<std::pair<double, double>, double> cells;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        std::istringstream ls(line);
        std::string f1, f2, f3;
        if (!std::getline(ls, f1, ',') || !std::getline(ls, f2, ',') ||
            !std::getline(ls, f3, ','))
            throw DataError("malformed driver table row at line " +
                            std::to_string(lineno));
        try {
            cells[{std::stod(f1), std::stod(f2)}] = std::stod(f3);
        } catch (const std::exception&) {
            throw DataError("non-numeric driver table value at line " +
                            std::to_string(lineno));
        }
    }

    DriverTable t;
    for (const auto& [key, val] : cells) {
        if (t.z1s.empty() || key.first > t.z1s.back()) t.z1s.push_back(key.first);
    }
    {
        std::vector<double> z2s;
        for (const auto& [key, val] : cells) z2s.push_back(key.second);
        std::sort(z2s.begin(), z2s.end());
        z2s.erase(std::unique(z2s.begin(), z2s.end()), z2s.end());
        t.z2s = std::move(z2s);
    }
    if (cells.size() != t.z1s.size() * t.z2s.size())
        throw DataError("driver table is not a complete rectangle: " + path);
    t.g.resize(cells.size());
    for (std::size_t i = 0; i < t.z1s.size(); ++i)
        for (std::size_t j = 0; j < t.z2s.size(); ++j) {
            auto it = cells.find({t.z1s[i], t.z2s[j]});
            if (it == cells.end())
                throw DataError("driver table missing node: " + path);
            t.g[i * t.z2s.size() + j] = it->second;
        }
    return t;
}

}  // namespace ivskew

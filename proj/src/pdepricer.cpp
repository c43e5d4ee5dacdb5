#include "ivskew/pdepricer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ivskew/blackscholes.hpp"
#include "ivskew/errors.hpp"

namespace ivskew {

void GridSpec::validate() const {
    if (!(x_lo < 0.0 && 0.0 < x_hi))
        throw ValidationError("GridSpec: require x_lo < 0 < x_hi");
    if (!(y_lo < y_hi)) throw ValidationError("GridSpec: require y_lo < y_hi");
    if (nx < 8 || ny < 8 || nt < 8)
        throw ValidationError("GridSpec: nx, ny, nt must all be >= 8");
    if (!(T > 0.0)) throw ValidationError("GridSpec: maturity T must be positive");
}

std::vector<double> GridSpec::x_nodes() const {
    std::vector<double> xs(nx);
    for (int i = 0; i < nx; ++i) xs[i] = x_lo + (i + 1) * dx();
    return xs;
}

std::vector<double> GridSpec::y_nodes() const {
    std::vector<double> ys(ny);
    for (int j = 0; j < ny; ++j) ys[j] = y_lo + (j + 1) * dy();
    return ys;
}

void PdeScheme::validate() const {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw ValidationError("PdeScheme: theta must lie in [0, 1]");
    if (rannacher_steps < 0)
        throw ValidationError("PdeScheme: rannacher_steps must be >= 0");
}

namespace {

std::vector<double> step_thetas(const PdeScheme& scheme, int nt) {
    std::vector<double> thetas(nt, scheme.theta);
    const int r = std::min(scheme.rannacher_steps, nt);
    std::fill(thetas.begin(), thetas.begin() + r, 1.0);
    return thetas;
}

void check_growth(double now, double prev, int step) {
    const bool grew = prev > 1e-3 && now > 10.0 * prev;
    if (std::isfinite(now) && now <= 1e8 && !grew) return;
    std::ostringstream os;
    os << "time-step instability at step " << step << " (sup-norm " << now
       << " from " << prev << "); increase nt or refine the grid";
    throw NumericError(os.str());
}

/// Tridiagonal operator coefficients, one row per interior y node.
struct Tri {
    std::vector<double> sub, diag, sup;
};

std::vector<double> apply_tri(const Tri& A, const std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    std::vector<double> out(n);
    for (int j = 0; j < n; ++j) {
        double s = A.diag[j] * v[j];
        if (j > 0) s += A.sub[j] * v[j - 1];
        if (j + 1 < n) s += A.sup[j] * v[j + 1];
        out[j] = s;
    }
    return out;
}

void thomas_solve(std::vector<double> lo, std::vector<double> di,
                  std::vector<double> up, std::vector<double> rhs,
                  std::vector<double>& out) {
    const int n = static_cast<int>(rhs.size());
    for (int j = 1; j < n; ++j) {
        if (di[j - 1] == 0.0) throw NumericError("tridiagonal solve hit a zero pivot");
        const double w = lo[j] / di[j - 1];
        di[j] -= w * up[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    if (di[n - 1] == 0.0) throw NumericError("tridiagonal solve hit a zero pivot");
    out.resize(n);
    out[n - 1] = rhs[n - 1] / di[n - 1];
    for (int j = n - 2; j >= 0; --j)
        out[j] = (rhs[j] - up[j] * out[j + 1]) / di[j];
}

/// Coefficients sampled on the interior y nodes.
struct YCoefs {
    std::vector<double> ys, sig, av, mv, lamv, muv;
};

YCoefs sample_coefs(const SvModel& model, const GridSpec& grid) {
    YCoefs c;
    c.ys = grid.y_nodes();
    const int ny = grid.ny;
    c.sig.resize(ny);
    c.av.resize(ny);
    c.mv.resize(ny);
    c.lamv.resize(ny);
    c.muv.resize(ny);
    for (int j = 0; j < ny; ++j) {
        const double y = c.ys[j];
        c.sig[j] = model.sigma(y);
        c.av[j] = model.a(y);
        c.mv[j] = model.m(y);
        c.muv[j] = model.mu(y);
        c.lamv[j] = sharpe(model, y);
    }
    return c;
}

/// y derivative with the Neumann edge convention (ghost = edge value).
void dy_neumann(const double* u, int ny, double dy, double* out) {
    out[0] = (u[1] - u[0]) / (2.0 * dy);
    for (int j = 1; j + 1 < ny; ++j) out[j] = (u[j + 1] - u[j - 1]) / (2.0 * dy);
    out[ny - 1] = (u[ny - 1] - u[ny - 2]) / (2.0 * dy);
}

/// Builds the 1-D y operator 0.5 a^2 d_yy + b d_y - kill with Neumann folds.
Tri build_tri(const YCoefs& c, const std::vector<double>& b,
              const std::vector<double>& kill, double dy) {
    const int ny = static_cast<int>(c.ys.size());
    Tri A;
    A.sub.assign(ny, 0.0);
    A.diag.assign(ny, 0.0);
    A.sup.assign(ny, 0.0);
    for (int j = 0; j < ny; ++j) {
        const double ay2 = 0.5 * c.av[j] * c.av[j] / (dy * dy);
        const double byu = b[j] / (2.0 * dy);
        A.diag[j] = -2.0 * ay2 - (kill.empty() ? 0.0 : kill[j]);
        if (j > 0) A.sub[j] = ay2 - byu;
        else A.diag[j] += ay2 - byu;
        if (j + 1 < ny) A.sup[j] = ay2 + byu;
        else A.diag[j] += ay2 + byu;
    }
    return A;
}

/// theta-scheme march of u' = A u - src(u), with lagged source and one
/// optional correction sweep. Returns all levels, [(nt+1) * ny].
template <typename SrcFn>
std::vector<double> march_1d(const Tri& A, const std::vector<double>& u0,
                             const std::vector<double>& thetas, double dt,
                             bool correction, SrcFn&& src) {
    const int ny = static_cast<int>(u0.size());
    const int nt = static_cast<int>(thetas.size());
    std::vector<double> all(static_cast<std::size_t>(nt + 1) * ny);
    std::copy(u0.begin(), u0.end(), all.begin());

    std::vector<double> un = u0, ustar, expl(ny), rhs(ny), s0(ny), s1(ny);
    double prev_norm = 0.0;
    for (double v : un) prev_norm = std::max(prev_norm, std::abs(v));

    for (int n = 0; n < nt; ++n) {
        const double th = thetas[n];
        const auto Au = apply_tri(A, un);
        for (int j = 0; j < ny; ++j) expl[j] = un[j] + dt * (1.0 - th) * Au[j];
        src(un, s0);

        std::vector<double> lo(ny), di(ny), up(ny);
        for (int j = 0; j < ny; ++j) {
            lo[j] = -dt * th * A.sub[j];
            di[j] = 1.0 - dt * th * A.diag[j];
            up[j] = -dt * th * A.sup[j];
        }
        for (int j = 0; j < ny; ++j) rhs[j] = expl[j] - dt * s0[j];
        thomas_solve(lo, di, up, rhs, ustar);
        if (correction) {
            src(ustar, s1);
            for (int j = 0; j < ny; ++j)
                rhs[j] = expl[j] - dt * ((1.0 - th) * s0[j] + th * s1[j]);
            thomas_solve(lo, di, up, rhs, ustar);
        }

        double norm = 0.0;
        for (double v : ustar) norm = std::max(norm, std::abs(v));
        check_growth(norm, prev_norm, n + 1);
        prev_norm = norm;
        std::copy(ustar.begin(), ustar.end(),
                  all.begin() + static_cast<std::size_t>(n + 1) * ny);
        un = ustar;
    }
    return all;
}

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

/// Full-grid accessors including boundary columns, reconstructing the
/// Dirichlet x values and the Neumann y fold. i in [0, nx+1], j in [0, ny+1].
double ut_full(const PdeSolution& s, int n, int jf) {
    return s.u_tilde_at(n, clampi(jf - 1, 0, s.grid.ny - 1));
}

double u_full(const PdeSolution& s, int n, int if_, int jf) {
    if (if_ == 0) return -(1.0 - std::exp(s.grid.x_lo)) + ut_full(s, n, jf);
    if (if_ == s.grid.nx + 1) return ut_full(s, n, jf);
    return s.u_at(n, if_ - 1, clampi(jf - 1, 0, s.grid.ny - 1));
}

double p_full(const PdeSolution& s, int n, int if_, int jf) {
    return ut_full(s, n, jf) - u_full(s, n, if_, jf);
}

struct CellPos {
    int i0;
    double w;
};

CellPos locate(double v, double lo, double h, int n_cells, const char* axis) {
    const double t = (v - lo) / h;
    const double over = 1e-9 * (n_cells + 1);
    if (t < -over || t > n_cells + over) {
        std::ostringstream os;
        os << "query outside grid in " << axis << ": " << v;
        throw ValidationError(os.str());
    }
    int i0 = static_cast<int>(std::floor(t));
    i0 = clampi(i0, 0, n_cells - 1);
    const double w = std::min(1.0, std::max(0.0, t - i0));
    return {i0, w};
}

double bilinear_p(const PdeSolution& s, int n, const CellPos& px,
                  const CellPos& py) {
    const double p00 = p_full(s, n, px.i0, py.i0);
    const double p10 = p_full(s, n, px.i0 + 1, py.i0);
    const double p01 = p_full(s, n, px.i0, py.i0 + 1);
    const double p11 = p_full(s, n, px.i0 + 1, py.i0 + 1);
    return (1.0 - px.w) * ((1.0 - py.w) * p00 + py.w * p01) +
           px.w * ((1.0 - py.w) * p10 + py.w * p11);
}

}  // namespace

PdeSolution solve_value(const SvModel& model, const DriverSpec& driver,
                        const PutContract& contract, const GridSpec& grid,
                        const PdeScheme& scheme) {
    grid.validate();
    scheme.validate();
    if (model.asymptotics_only)
        throw ValidationError(
            "solve_value: model '" + model.name +
            "' is asymptotics-only (volatility not bounded away from zero)");
    {
        const ValidationReport rep = validate_assumptions(model, grid.y_lo, grid.y_hi);
        if (!rep.passed) {
            std::string msg = "solve_value: model assumptions fail on the y range:";
            for (const auto& is : rep.issues) msg += " " + is + ";";
            throw ValidationError(msg);
        }
    }
    if (driver.family == DriverSpec::Family::DistortedEntropic && driver.gamma <= 0.0)
        throw ValidationError("solve_value: distorted-entropic driver needs gamma > 0");
    if (driver.family == DriverSpec::Family::GenericTabulated &&
        (driver.table.z1s.empty() || driver.table.z2s.empty()))
        throw ValidationError("solve_value: tabulated driver has an empty table");

    const int nx = grid.nx, ny = grid.ny, nt = grid.nt;
    const double dx = grid.dx(), dy = grid.dy(), dt = grid.dt();
    const double Ktil = contract.k_tilde();
    const double rho = model.rho, rhop = model.rhop;
    const YCoefs c = sample_coefs(model, grid);
    const auto thetas = step_thetas(scheme, nt);

    const ConjugateDriver conj =
        driver.family == DriverSpec::Family::DistortedEntropic
            ? ConjugateDriver::closed_form(driver)
            : ConjugateDriver::numeric_sup(driver);
    auto source_at = [&](int j, double uy) {
        const double z2 = rhop * Ktil * c.av[j] * uy;
        const double lam = c.lamv[j];
        if (driver.family == DriverSpec::Family::DistortedEntropic) {
            const double g = driver.gamma, e = driver.eta;
            return (lam * lam / (2.0 * g) - g * z2 * z2 / 2.0 + e * lam * z2) / Ktil;
        }
        return conjugate(conj, -lam, z2) / Ktil;
    };

    std::vector<double> bdrift(ny);
    for (int j = 0; j < ny; ++j) bdrift[j] = c.mv[j] - rho * c.av[j] * c.lamv[j];

    const Tri A1 = build_tri(c, bdrift, {}, dy);
    std::vector<double> wy(ny);
    auto src1 = [&](const std::vector<double>& u1, std::vector<double>& out) {
        dy_neumann(u1.data(), ny, dy, wy.data());
        for (int j = 0; j < ny; ++j) out[j] = source_at(j, wy[j]);
    };
    std::vector<double> ut =
        march_1d(A1, std::vector<double>(ny, 0.0), thetas, dt, scheme.correction, src1);

    using SpMat = Eigen::SparseMatrix<double>;
    const int N = nx * ny;
    std::vector<double> cxx(ny), cyy(ny), cxy(ny), cx(ny), cy(ny);
    for (int j = 0; j < ny; ++j) {
        cxx[j] = 0.5 * c.sig[j] * c.sig[j] / (dx * dx);
        cyy[j] = 0.5 * c.av[j] * c.av[j] / (dy * dy);
        cxy[j] = rho * c.sig[j] * c.av[j] / (4.0 * dx * dy);
        const double drift_x =
            (scheme.include_stock_drift ? c.muv[j] : 0.0) - 0.5 * c.sig[j] * c.sig[j];
        cx[j] = drift_x / (2.0 * dx);
        cy[j] = bdrift[j] / (2.0 * dy);
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(N) * 9);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const int k = i * ny + j;
            double d = -2.0 * cxx[j] - 2.0 * cyy[j];
            if (i + 1 < nx) trips.emplace_back(k, (i + 1) * ny + j, cxx[j] + cx[j]);
            if (i - 1 >= 0) trips.emplace_back(k, (i - 1) * ny + j, cxx[j] - cx[j]);
            if (j + 1 < ny) trips.emplace_back(k, i * ny + j + 1, cyy[j] + cy[j]);
            else d += cyy[j] + cy[j];
            if (j - 1 >= 0) trips.emplace_back(k, i * ny + j - 1, cyy[j] - cy[j]);
            else d += cyy[j] - cy[j];
            const int corners[4][3] = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
            for (const auto& cn : corners) {
                const int ii = i + cn[0], jj = j + cn[1];
                if (ii < 0 || ii >= nx) continue;
                const double v = cn[2] * cxy[j];
                trips.emplace_back(k, ii * ny + clampi(jj, 0, ny - 1), v);
            }
            trips.emplace_back(k, k, d);
        }
    }
    SpMat A(N, N);
    A.setFromTriplets(trips.begin(), trips.end());

    using Solver = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;
    std::map<double, std::unique_ptr<Solver>> solvers;
    {
        SpMat I(N, N);
        I.setIdentity();
        for (double th : thetas) {
            if (solvers.count(th)) continue;
            SpMat M = I - (dt * th) * A;
            auto s = std::make_unique<Solver>();
            s->compute(M);
            if (s->info() != Eigen::Success)
                throw NumericError("sparse factorization of the implicit operator failed");
            solvers[th] = std::move(s);
        }
    }

    PdeSolution sol{grid,
                    scheme,
                    model.name,
                    model.sigma_low,
                    model.sigma_high,
                    driver,
                    contract,
                    std::vector<double>(static_cast<std::size_t>(nt + 1) * N),
                    std::move(ut)};

    auto ut_level = [&](int n) {
        return sol.u_tilde.data() + static_cast<std::size_t>(n) * ny;
    };
    const double blo = -(1.0 - std::exp(grid.x_lo));
    auto bdry = [&](const double* utn, Eigen::VectorXd& b) {
        b.setZero();
        for (int j = 0; j < ny; ++j) {
            const int jp = clampi(j + 1, 0, ny - 1), jm = clampi(j - 1, 0, ny - 1);
            const double ulo = blo + utn[j];
            const double ulop = blo + utn[jp], ulom = blo + utn[jm];
            b[j] += (cxx[j] - cx[j]) * ulo + cxy[j] * (ulom - ulop);
            const int k = (nx - 1) * ny + j;
            b[k] += (cxx[j] + cx[j]) * utn[j] + cxy[j] * (utn[jp] - utn[jm]);
        }
    };

    std::vector<double> wcol(ny);
    auto src2 = [&](const Eigen::VectorXd& un, Eigen::VectorXd& out) {
        for (int i = 0; i < nx; ++i) {
            dy_neumann(un.data() + static_cast<std::size_t>(i) * ny, ny, dy, wcol.data());
            for (int j = 0; j < ny; ++j) out[i * ny + j] = source_at(j, wcol[j]);
        }
    };

    Eigen::VectorXd un(N);
    {
        const auto xs = grid.x_nodes();
        for (int i = 0; i < nx; ++i) {
            const double payoff = -std::max(1.0 - std::exp(xs[i]), 0.0);
            for (int j = 0; j < ny; ++j) un[i * ny + j] = payoff;
        }
    }
    std::copy(un.data(), un.data() + N, sol.u.begin());
    double prev_norm = un.cwiseAbs().maxCoeff();

    Eigen::VectorXd bc_old(N), bc_new(N), expl(N), s0(N), s1(N), rhs(N), ustar(N);
    for (int n = 0; n < nt; ++n) {
        const double th = thetas[n];
        Solver& lu = *solvers.at(th);
        bdry(ut_level(n), bc_old);
        bdry(ut_level(n + 1), bc_new);
        expl = un + dt * (1.0 - th) * (A * un + bc_old);
        src2(un, s0);
        rhs = expl - dt * s0 + (dt * th) * bc_new;
        ustar = lu.solve(rhs);
        if (lu.info() != Eigen::Success)
            throw NumericError("sparse back-substitution failed");
        if (scheme.correction) {
            src2(ustar, s1);
            rhs = expl - dt * ((1.0 - th) * s0 + th * s1) + (dt * th) * bc_new;
            ustar = lu.solve(rhs);
            if (lu.info() != Eigen::Success)
                throw NumericError("sparse back-substitution failed");
        }
        const double norm = ustar.cwiseAbs().maxCoeff();
        check_growth(norm, prev_norm, n + 1);
        prev_norm = norm;
        std::copy(ustar.data(), ustar.data() + N,
                  sol.u.begin() + static_cast<std::size_t>(n + 1) * N);
        un.swap(ustar);
    }
    return sol;
}

std::vector<double> merton_component_closed(const SvModel& model, double gamma,
                                            double eta, const GridSpec& grid,
                                            const PdeScheme& scheme) {
    grid.validate();
    scheme.validate();
    if (gamma <= 0.0)
        throw ValidationError("merton_component_closed: gamma must be positive");
    if (model.rhop <= 0.0)
        throw ValidationError("merton_component_closed: requires |rho| < 1");

    const int ny = grid.ny, nt = grid.nt;
    const double dy = grid.dy(), dt = grid.dt();
    const YCoefs c = sample_coefs(model, grid);
    const double rho = model.rho, rhop = model.rhop;

    std::vector<double> b(ny), kill(ny);
    for (int j = 0; j < ny; ++j) {
        b[j] = c.mv[j] - (rho + eta * rhop) * c.av[j] * c.lamv[j];
        kill[j] = 0.5 * c.lamv[j] * c.lamv[j] * rhop * rhop;
    }
    const Tri A = build_tri(c, b, kill, dy);
    const auto thetas = step_thetas(scheme, nt);
    auto no_src = [](const std::vector<double>&, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    std::vector<double> f =
        march_1d(A, std::vector<double>(ny, 1.0), thetas, dt, false, no_src);

    std::vector<double> phi0(f.size());
    const double scale = -1.0 / (gamma * rhop * rhop);
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!(f[k] > 0.0))
            throw NumericError(
                "merton_component_closed: the scheme lost positivity of f; "
                "refine the grid");
        phi0[k] = scale * std::log(f[k]);
    }
    return phi0;
}

double unit_price(const PdeSolution& sol, double tau, double x, double y) {
    const GridSpec& g = sol.grid;
    const CellPos pt = locate(tau, 0.0, g.dt(), g.nt, "tau");
    const CellPos px = locate(x, g.x_lo, g.dx(), g.nx + 1, "x");
    const CellPos py = locate(y, g.y_lo, g.dy(), g.ny + 1, "y");
    const double p0 = bilinear_p(sol, pt.i0, px, py);
    const double p1 = bilinear_p(sol, pt.i0 + 1, px, py);
    return (1.0 - pt.w) * p0 + pt.w * p1;
}

double indifference_price(const PdeSolution& sol, double tau, double x, double y) {
    return sol.contract.k_tilde() * unit_price(sol, tau, x, y);
}

VolCurve implied_vol_curve(const PdeSolution& sol, double tau, double y0,
                           const std::vector<double>& xs) {
    VolCurve curve;
    curve.tau = tau;
    curve.y0 = y0;
    curve.points.resize(xs.size());
    const double lo = std::max(0.5 * sol.sigma_low, 1e-8);
    const double hi = 2.0 * sol.sigma_high;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        VolPoint& pt = curve.points[k];
        pt.x = xs[k];
        const double price = unit_price(sol, tau, xs[k], y0);
        try {
            pt.vol = implied_vol(price, tau, xs[k], lo, hi);
            pt.valid = true;
        } catch (const NumericError&) {
            pt.vol = 0.0;
            pt.valid = false;
        }
    }
    return curve;
}

double vega_gap(const PdeSolution& sol, double tau, double x, double y) {
    const double dy = sol.grid.dy();
    if (y - dy < sol.grid.y_lo || y + dy > sol.grid.y_hi)
        throw ValidationError(
            "vega_gap: point must be at least one grid spacing inside the y bounds");
    const CellPos pt = locate(tau, 0.0, sol.grid.dt(), sol.grid.nt, "tau");
    auto gap_at = [&](int n) {
        const CellPos px = locate(x, sol.grid.x_lo, sol.grid.dx(), sol.grid.nx + 1, "x");
        const CellPos yp = locate(y + dy, sol.grid.y_lo, dy, sol.grid.ny + 1, "y");
        const CellPos ym = locate(y - dy, sol.grid.y_lo, dy, sol.grid.ny + 1, "y");
        return (bilinear_p(sol, n, px, yp) - bilinear_p(sol, n, px, ym)) / (2.0 * dy);
    };
    return (1.0 - pt.w) * gap_at(pt.i0) + pt.w * gap_at(pt.i0 + 1);
}

void write_solution_csv(const PdeSolution& sol, std::ostream& os) {
    const GridSpec& g = sol.grid;
    const auto xs = g.x_nodes();
    const auto ys = g.y_nodes();
    const double Ktil = sol.contract.k_tilde();
    os << "tau,x,y,u,u_tilde,price\n";
    os << std::setprecision(17);
    for (int n = 0; n <= g.nt; ++n) {
        const double tau = n * g.dt();
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                const double u = sol.u_at(n, i, j);
                const double utl = sol.u_tilde_at(n, j);
                os << tau << ',' << xs[i] << ',' << ys[j] << ',' << u << ','
                   << utl << ',' << Ktil * (utl - u) << '\n';
            }
        }
    }
}

}  // namespace ivskew

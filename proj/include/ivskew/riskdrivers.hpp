#pragma once

#include <string>
#include <vector>

namespace ivskew {

/// Rectangular table of driver samples g(z1, z2), strictly increasing axes.
struct DriverTable {
    std::vector<double> z1s;
    std::vector<double> z2s;
    std::vector<double> g;  ///< row-major [z1 index][z2 index]

    double at(std::size_t i, std::size_t j) const { return g[i * z2s.size() + j]; }
};

/// A convex BSDE driver g(z1, z2): the parametric distorted-entropic family
/// gamma/2 * ((z1 + eta*z2)^2 + z2^2), or a tabulated generic driver.
struct DriverSpec {
    enum class Family { DistortedEntropic, GenericTabulated };

    Family family = Family::DistortedEntropic;
    double gamma = 1.0;  ///< risk aversion, > 0 for the parametric family
    double eta = 0.0;    ///< distortion
    DriverTable table;   ///< used only for GenericTabulated

    static DriverSpec distorted_entropic(double gamma, double eta);
    static DriverSpec tabulated(DriverTable table);
};

/// Fenchel-Legendre conjugate of a driver in its first argument,
/// ghat(zeta, z2) = sup_z1 { zeta*z1 - g(z1, z2) }.
struct ConjugateDriver {
    enum class Mode { ClosedForm, NumericSup };

    DriverSpec source;
    Mode mode = Mode::ClosedForm;
    int sup_nodes = 201;  ///< z1 search-grid size for NumericSup

    static ConjugateDriver closed_form(DriverSpec d);
    static ConjugateDriver numeric_sup(DriverSpec d, int sup_nodes = 201);
};

/// Lattice admissibility report for the strictly-quadratic driver conditions.
struct AdmissibilityReport {
    bool normalization_ok = false;     ///< g(0,0) = 0
    bool convexity_z1_ok = false;      ///< second differences in z1 nonnegative
    bool strict_curvature_ok = false;  ///< min z1 curvature strictly positive
    double c1 = 0.0;                   ///< smallest feasible lower-bound constant
    double c2 = 0.0;                   ///< smallest feasible upper-bound constant
    bool bounds_ok = false;            ///< both constants finite and consistent
    bool conjugate_ok = false;         ///< conjugate passes the same lattice tests
    std::string notes;

    bool all_pass() const {
        return normalization_ok && convexity_z1_ok && strict_curvature_ok &&
               bounds_ok && conjugate_ok;
    }
};

/// Rectangle plus resolution describing a test lattice.
struct Lattice {
    double z1_lo, z1_hi;
    double z2_lo, z2_hi;
    int n1 = 21, n2 = 21;
};

/// Evaluates the driver. Tabulated drivers use bilinear interpolation and
/// reject inputs outside the table.
double eval_driver(const DriverSpec& d, double z1, double z2);

/// Evaluates the conjugate. ClosedForm (distorted-entropic only) returns
/// zeta^2/(2 gamma) - gamma z2^2/2 - eta zeta z2. NumericSup maximizes
/// zeta*z1 - g(z1, z2) on a search window centered at the analytic maximizer
/// estimate, golden-section refined; a maximizer on the window boundary
/// raises a NumericError (inconclusive sup).
double conjugate(const ConjugateDriver& c, double zeta, double z2);

/// ghat_{z2}(zeta, 0): -eta*zeta in closed form, central finite difference
/// with step h in NumericSup mode.
double conjugate_slope_at_zero(const ConjugateDriver& c, double zeta,
                               double h = 1e-6);

/// Checks the strictly-quadratic driver conditions on a lattice: the
/// normalization g(0,0)=0, convexity and strict curvature in z1, the
/// two-sided quadratic growth bounds with the smallest feasible constants,
/// and conjugate invariance (the numeric conjugate passes the same tests).
AdmissibilityReport check_strictly_quadratic(const DriverSpec& d,
                                             const Lattice& lattice);

/// Loads a tabulated driver from CSV with header `z1,z2,g`; row order is
/// arbitrary; the grid is inferred and validated as a complete rectangle.
DriverTable load_driver_table_csv(const std::string& path);

}  // namespace ivskew

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "hydroldp/hydrostatic.hpp"
#include "hydroldp/spectral.hpp"
#include "hydroldp/vertical.hpp"
#include "test_support.hpp"

using namespace hydroldp;
using namespace hydroldp::testing;
using std::numbers::pi;

namespace {

double max_abs_diff(const BarotropicField& a, const BarotropicField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

BarotropicField random_plane(const GridSpec& g, int comps, unsigned seed) {
    Field f = random_field(g, comps, seed);
    return vertical_average(f);
}

// Dense periodic spectral differentiation along one axis of an nx-by-ny plane.
Eigen::MatrixXd plane_diff(const GridSpec& g, int axis) {
    const int n = axis == 0 ? g.nx : g.ny;
    const double L = axis == 0 ? g.lx : g.ly;
    Eigen::MatrixXd D1 = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) D1(i, j) = 0.5 * std::pow(-1.0, i - j) / std::tan(0.5 * (i - j) * 2.0 * pi / n) * 2.0 * pi / L;
    const int N = g.nx * g.ny;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int m = 0; m < n; ++m) {
                if (axis == 0) D(i * g.ny + j, m * g.ny + j) = D1(i, m);
                else D(i * g.ny + j, i * g.ny + m) = D1(j, m);
            }
    return D;
}

}  // namespace

TEST_CASE("vertical average and fluctuation") {
    GridSpec g = small_grid(8, 8, 6);
    Field zind = Field::sample(g, 1, {}, [](int, double x, double y, double) { return std::sin(x) + y; });
    BarotropicField m = vertical_average(zind);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) CHECK(m(0, i, j) == doctest::Approx(zind(0, i, j, 3)).epsilon(1e-14));
    Field odd = Field::sample(g, 1, {}, [&](int, double, double, double z) { return z + g.h / 2; });
    CHECK(vertical_average(odd).max_abs() < 1e-15);
    Field r = random_field(g, 2, 4);
    Field tilde = r - lift(vertical_average(r));
    CHECK(vertical_average(tilde).max_abs() <= 1e-12 * r.max_abs());
}

TEST_CASE("q_h annihilates solenoidal fields and fixes gradients") {
    GridSpec g = small_grid(16, 16, 4);
    BarotropicField psi(g, 1);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) psi(0, i, j) = std::sin(2 * g.x(i)) * std::cos(g.y(j)) + 0.3 * std::cos(3 * g.y(j));
    BarotropicField grad = barotropic_gradient(psi);
    CHECK(max_abs_diff(q_h(grad), grad) < 1e-10);
    BarotropicField perp(g, 2);
    for (std::size_t q = 0; q < g.columns(); ++q) {
        perp.values()[q] = -grad.values()[g.columns() + q];
        perp.values()[g.columns() + q] = grad.values()[q];
    }
    CHECK(q_h(perp).max_abs() < 1e-10);
    BarotropicField f = random_plane(g, 2, 8);
    BarotropicField qf = q_h(f);
    CHECK(max_abs_diff(q_h(qf), qf) < 1e-10);
}

TEST_CASE("q_h matches a dense pseudo-inverse oracle") {
    GridSpec g = small_grid(8, 6, 3);
    g.lx = 5.0;
    const int N = g.nx * g.ny;
    Eigen::MatrixXd G(2 * N, N);
    G << plane_diff(g, 0), plane_diff(g, 1);
    Eigen::MatrixXd L = G.transpose() * G;
    Eigen::MatrixXd Q = G * L.completeOrthogonalDecomposition().pseudoInverse() * G.transpose();
    BarotropicField f = random_plane(g, 2, 21);
    Eigen::VectorXd fv(2 * N);
    for (int n = 0; n < 2 * N; ++n) fv[n] = f.values()[n];
    Eigen::VectorXd ref = Q * fv;
    BarotropicField got = q_h(f);
    double err = 0.0;
    for (int n = 0; n < 2 * N; ++n) err = std::max(err, std::abs(ref[n] - got.values()[n]));
    CHECK(err < 1e-10);
}

TEST_CASE("hydrostatic projection is an orthogonal projector") {
    GridSpec g = small_grid(8, 8, 5);
    Field a = random_field(g, 2, 31), b = random_field(g, 2, 32);
    Field pa = hydrostatic_project(a);
    CHECK(max_abs_diff(hydrostatic_project(pa), pa) < 1e-10);
    CHECK(std::abs(inner_l2(pa, a - pa)) <= 1e-10 * inner_l2(a, a));
    CHECK(std::abs(inner_l2(pa, b) - inner_l2(a, hydrostatic_project(b))) < 1e-10);
    CHECK(barotropic_divergence(vertical_average(pa)).max_abs() < 1e-10);
    Field c(g, 2);
    c.fill(0.7);
    CHECK(max_abs_diff(hydrostatic_project(c), c) < 1e-14);
    Field sol = pa;
    CHECK(max_abs_diff(hydrostatic_project(sol), sol) < 1e-10);
}

TEST_CASE("diagnostic w") {
    GridSpec g = small_grid(16, 8, 64);
    g.lx = 3.0;
    const double kx = 2 * pi / g.lx;
    // Linear profile: the midpoint cumulative rule is exact.
    auto zeta_lin = [](double z) { return 1.0 + 2.0 * z; };
    auto Z_lin = [&](double z) { return (z + g.h) + (z * z - g.h * g.h); };
    Field v = Field::sample(g, 2, BoundaryCondition::neumann(),
                            [&](int c, double x, double, double z) { return c == 0 ? std::sin(kx * x) * zeta_lin(z) : 0.0; });
    Field w = diagnostic_w(v);
    double err = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int k = 0; k < g.nz; ++k) err = std::max(err, std::abs(w(0, i, 0, k) + kx * std::cos(kx * g.x(i)) * Z_lin(g.z(k))));
    CHECK(err < 1e-6);

    // Smooth profile: second-order convergence of the cumulative midpoint rule.
    auto w_err = [&](int nz) {
        GridSpec gg = g;
        gg.nz = nz;
        Field vv = Field::sample(gg, 2, BoundaryCondition::neumann(),
                                 [&](int c, double x, double, double z) { return c == 0 ? std::sin(kx * x) * std::cos(pi * z) : 0.0; });
        Field ww = diagnostic_w(vv);
        double e = 0.0;
        for (int i = 0; i < gg.nx; ++i)
            for (int k = 0; k < nz; ++k) {
                const double z = gg.z(k);
                const double ref = -kx * std::cos(kx * gg.x(i)) * (std::sin(pi * z) - std::sin(-pi * gg.h)) / pi;
                e = std::max(e, std::abs(ww(0, i, 0, k) - ref));
            }
        return e;
    };
    const double ratio = w_err(32) / w_err(64);
    CHECK(ratio > 3.6);
    CHECK(ratio < 4.4);

    Field sol = Field::sample(g, 2, BoundaryCondition::neumann(),
                              [&](int c, double x, double y, double) { return c == 0 ? std::cos(y) : std::sin(kx * x); });
    CHECK(diagnostic_w(sol).max_abs() < 1e-12);
    Field r = hydrostatic_project(random_field(small_grid(8, 8, 8), 2, 3));
    CHECK(surface_w(r).max_abs() <= 1e-10 * norm_l2(r));
}

TEST_CASE("pressure term") {
    GridSpec g = small_grid(16, 8, 64);
    g.lx = 4.0;
    const double kx = 2 * pi / g.lx;
    KappaProfile one = KappaProfile::constant(g, 1.0);
    CHECK(pressure_term(one, Field(g, 1)).max_abs() == 0.0);
    Field flat = Field::sample(g, 1, {}, [](int, double, double, double z) { return z * z; });
    CHECK(pressure_term(one, flat).max_abs() < 1e-12);
    Field th = Field::sample(g, 1, {}, [&](int, double x, double, double z) { return std::cos(kx * x) * (0.5 - z); });
    Field p = pressure_term(one, th);
    double err = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int k = 0; k < g.nz; ++k) {
            const double z = g.z(k);
            const double P = 0.5 * (z + g.h) - 0.5 * (z * z - g.h * g.h);
            err = std::max(err, std::abs(p(0, i, 0, k) + kx * std::sin(kx * g.x(i)) * P));
            err = std::max(err, std::abs(p(1, i, 0, k)));
        }
    CHECK(err < 1e-6);
    Field cot = random_field(g, 2, 5), t = random_field(g, 1, 6);
    KappaProfile kap;
    kap.kappa = random_field(g, 1, 7);
    kap.bound = 1e9;
    CHECK(std::abs(dot(pressure_term(kap, t), cot) - dot(t, pressure_term_transpose(kap, cot))) < 1e-9);
}

TEST_CASE("robin form") {
    GridSpec g = small_grid(8, 8, 8);
    Field c(g, 1);
    c.fill(1.5);
    CHECK(robin_form(c, c, 0.8) == doctest::Approx(-0.8 * 2.25 * g.area()).epsilon(1e-12));
    Field a = random_smooth_field(g, 1, 41), b = random_smooth_field(g, 1, 42);
    CHECK(robin_form(a, b, 1.3) == doctest::Approx(robin_form(b, a, 1.3)).epsilon(1e-13));
    // alpha = 0 leaves only the gradient pairing, which is linear in alpha.
    const double f0 = robin_form(a, b, 0.0), f1 = robin_form(a, b, 1.0), f2 = robin_form(a, b, 2.0);
    CHECK(f2 - f1 == doctest::Approx(f1 - f0).epsilon(1e-10));

    // Converges to the continuum form for smooth profiles.
    auto err = [&](int nz) {
        GridSpec gg = small_grid(8, 8, nz);
        Field th = Field::sample(gg, 1, {}, [](int, double x, double, double z) { return std::cos(x) * (1 + z); });
        Field ps = Field::sample(gg, 1, {}, [](int, double x, double, double z) { return std::cos(x) * (2 - z * z); });
        // int_T2 sin^2 = int_T2 cos^2 = 2 pi^2; int (1+z)(2-z^2) = 11/12; int -2z = 1; trace product 2.
        const double alpha = 0.7;
        const double ref = -(2 * pi * pi * (11.0 / 12.0) + 2 * pi * pi * 1.0) - alpha * 2 * pi * pi * 2.0;
        return std::abs(robin_form(th, ps, alpha) - ref);
    };
    CHECK(err(64) < 1e-3);
    CHECK(err(32) / err(64) > 3.5);
}

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "hydroldp/errors.hpp"
#include "hydroldp/io.hpp"
#include "hydroldp/kernels.hpp"
#include "hydroldp/spectral.hpp"
#include "hydroldp/vertical.hpp"
#include "test_support.hpp"

using namespace hydroldp;
using namespace hydroldp::testing;

namespace {

// Dense trigonometric differentiation matrix on n points of [0, L) (Nyquist mode dropped).
Eigen::MatrixXd fourier_diff_matrix(int n, double L) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    const double h = 2.0 * std::numbers::pi / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double s = (i - j) * h;
            D(i, j) = 0.5 * std::pow(-1.0, i - j) / std::tan(0.5 * s);
        }
    return D * (2.0 * std::numbers::pi / L);
}

}  // namespace

TEST_CASE("spectral x-derivative matches the dense cotangent differentiation matrix") {
    GridSpec g = small_grid(8, 6, 3);
    g.lx = 3.0;
    Field f = random_field(g, 1, 11);
    Field d = horizontal_derivative(f, 0);
    Eigen::MatrixXd D = fourier_diff_matrix(g.nx, g.lx);
    // Column of the dense matrix drops the Nyquist mode exactly as the spectral symbol does.
    double err = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k) {
            Eigen::VectorXd line(g.nx);
            for (int i = 0; i < g.nx; ++i) line[i] = f(0, i, j, k);
            Eigen::VectorXd ref = D * line;
            for (int i = 0; i < g.nx; ++i) err = std::max(err, std::abs(ref[i] - d(0, i, j, k)));
        }
    CHECK(err < 1e-12);
}

TEST_CASE("round trip transform is the identity") {
    GridSpec g = small_grid(16, 8, 4);
    Field f = random_field(g, 2, 3);
    Field back = inverse_transform(forward_transform(f));
    CHECK(max_abs_diff(f, back) < 1e-14);
}

TEST_CASE("derivative of a resolved sine is exact") {
    GridSpec g = small_grid(16, 16, 4);
    Field f = Field::sample(g, 1, {}, [](int, double x, double y, double) { return std::sin(3 * x) * std::cos(2 * y); });
    Field dx = horizontal_derivative(f, 0);
    Field dy = horizontal_derivative(f, 1);
    Field ex = Field::sample(g, 1, {}, [](int, double x, double y, double) { return 3 * std::cos(3 * x) * std::cos(2 * y); });
    Field ey = Field::sample(g, 1, {}, [](int, double x, double y, double) { return -2 * std::sin(3 * x) * std::sin(2 * y); });
    CHECK(max_abs_diff(dx, ex) < 1e-12);
    CHECK(max_abs_diff(dy, ey) < 1e-12);
}

TEST_CASE("derivatives are skew and the dealias filter is symmetric") {
    GridSpec g = small_grid(8, 8, 4);
    Field a = random_field(g, 1, 1), b = random_field(g, 1, 2);
    for (int axis : {0, 1}) CHECK(std::abs(dot(horizontal_derivative(a, axis), b) + dot(a, horizontal_derivative(b, axis))) < 1e-11);
    CHECK(std::abs(dot(dealias(a), b) - dot(a, dealias(b))) < 1e-12);
    Field da = dealias(a);
    CHECK(max_abs_diff(dealias(da), da) < 1e-14);
}

TEST_CASE("vertical derivative requires a boundary condition") {
    GridSpec g = small_grid();
    Field f(g, 1);
    CHECK_THROWS_AS(vertical_derivative(f), MissingBoundaryCondition);
    CHECK_THROWS_AS(enforce_bc(f), MissingBoundaryCondition);
}

TEST_CASE("Neumann ghosts: constant columns have zero derivative, linear interior is exact") {
    GridSpec g = small_grid(4, 4, 16);
    Field c(g, 1, BoundaryCondition::neumann());
    c.fill(2.5);
    CHECK(vertical_derivative(c).max_abs() < 1e-14);
    CHECK(vertical_second_derivative(c).max_abs() < 1e-12);
    Field lin = Field::sample(g, 1, BoundaryCondition::neumann(), [](int, double, double, double z) { return 3 * z; });
    Field d = vertical_derivative(lin);
    for (int k = 1; k < g.nz - 1; ++k) CHECK(d(0, 0, 0, k) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("Robin ghost satisfies the discrete boundary relation") {
    GridSpec g = small_grid(4, 4, 8);
    const double alpha = 2.0;
    Field t = random_field(g, 1, 5, BoundaryCondition::robin(alpha));
    Field e = enforce_bc(t);
    const double dz = g.dz();
    for (std::size_t c = 0; c < g.columns(); ++c) {
        const double in = t.values()[c * g.nz + g.nz - 1];
        const double gh = e.ghost_top()[c];
        const double dtheta = (gh - in) / dz;
        const double trace = 0.5 * (gh + in);
        CHECK(std::abs(dtheta + alpha * trace) < 1e-12);
        CHECK(e.ghost_bottom()[c] == t.values()[c * g.nz]);
    }
}

TEST_CASE("vertical transposes agree with dot-product identities") {
    GridSpec g = small_grid(4, 4, 7);
    Field a = random_field(g, 2, 7), b = random_field(g, 2, 8);
    kernels::Ghosts gh{1.0, 0.7};
    CHECK(std::abs(dot(vertical_derivative(a, gh), b) - dot(a, vertical_derivative_transpose(b, gh))) < 1e-11);
    CHECK(std::abs(dot(cumulative_integral(a), b) - dot(a, cumulative_integral_transpose(b))) < 1e-12);
    CHECK(std::abs(dot(vertical_second_derivative(a, gh), b) - dot(a, vertical_second_derivative(b, gh))) < 1e-9);
}

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
    GridSpec g = small_grid(64, 64, 16);
    Field a = random_field(g, 2, 9);
    const kernels::Columns cols{2 * g.columns(), g.nz};
    const kernels::Ghosts gh{1.0, 0.9};
    std::vector<double> s(a.size()), o(a.size());
    kernels::serial::centered_diff(a.values(), s, cols, gh, g.dz());
    kernels::omp::centered_diff(a.values(), o, cols, gh, g.dz());
    CHECK(s == o);
    kernels::serial::second_diff(a.values(), s, cols, gh, g.dz());
    kernels::omp::second_diff(a.values(), o, cols, gh, g.dz());
    CHECK(s == o);
    kernels::serial::cumulative_midpoint(a.values(), s, cols, g.dz());
    kernels::omp::cumulative_midpoint(a.values(), o, cols, g.dz());
    CHECK(s == o);
    std::vector<cplx> rs(a.size()), ro;
    for (std::size_t i = 0; i < rs.size(); ++i) rs[i] = cplx(a.values()[i], -a.values()[i]);
    ro = rs;
    std::vector<double> shift(cols.count, 0.3);
    kernels::serial::implicit_heat_solve(rs, shift, cols, gh, 2.0);
    kernels::omp::implicit_heat_solve(ro, shift, cols, gh, 2.0);
    CHECK(rs == ro);
}

TEST_CASE("implicit heat solve inverts the tridiagonal operator") {
    const int nz = 9;
    std::vector<cplx> x(nz), rhs(nz);
    for (int k = 0; k < nz; ++k) x[k] = cplx(std::sin(k + 1.0), std::cos(2.0 * k));
    const kernels::Ghosts gh{1.0, 0.6};
    const double coef = 0.7, shift = 0.2;
    for (int k = 0; k < nz; ++k) {
        const cplx lo = k == 0 ? gh.lo * x[0] : x[k - 1];
        const cplx hi = k == nz - 1 ? gh.hi * x[nz - 1] : x[k + 1];
        rhs[k] = (1.0 + shift) * x[k] - coef * (lo - 2.0 * x[k] + hi);
    }
    std::vector<double> sh{shift};
    kernels::serial::implicit_heat_solve(rhs, sh, {1, nz}, gh, coef);
    for (int k = 0; k < nz; ++k) CHECK(std::abs(rhs[k] - x[k]) < 1e-13);
}

TEST_CASE("snapshot round trip is bit exact and rejects corrupted headers") {
    GridSpec g = small_grid(8, 4, 5);
    g.h = 2.0;
    Field f = random_field(g, 2, 13, BoundaryCondition::robin(0.75));
    const std::string path = "test_snapshot.hldp";
    write_snapshot(path, f);
    Field r = read_snapshot(path);
    CHECK(r.grid() == g);
    CHECK(r.bc() == f.bc());
    CHECK(std::equal(r.values().begin(), r.values().end(), f.values().begin()));
    {
        std::FILE* fp = std::fopen(path.c_str(), "r+b");
        std::fputc('X', fp);
        std::fclose(fp);
    }
    CHECK_THROWS_AS(read_snapshot(path), IoError);
    std::remove(path.c_str());
}

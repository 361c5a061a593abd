#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "hydroldp/errors.hpp"
#include "hydroldp/integrator.hpp"
#include "hydroldp/rng.hpp"
#include "hydroldp/vertical.hpp"
#include "test_support.hpp"

using namespace hydroldp;
using namespace hydroldp::testing;
using std::numbers::pi;

namespace {

Model base_model(const GridSpec& g, int modes = 0) {
    Model m;
    m.grid = g;
    m.noise = NoiseFamily::zero(g, modes);
    return m;
}

State random_state(const Model& m, unsigned seed, double amp) {
    State s{random_smooth_field(m.grid, 2, seed), random_smooth_field(m.grid, 1, seed + 7)};
    s.v *= amp;
    s.theta *= amp;
    return m.admissible(std::move(s));
}

bool bit_equal(const State& a, const State& b) {
    auto eq = [](const Field& x, const Field& y) {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x.values()[i] != y.values()[i]) return false;
        return true;
    };
    return eq(a.v, b.v) && eq(a.theta, b.theta);
}

// Plane operators by direct O(n^4) Fourier sums, independent of the FFT path.
using Plane = std::vector<double>;
using Symbol = std::function<std::complex<double>(int mx, int my)>;

Plane plane_apply(const GridSpec& g, const Plane& f, const Symbol& sym) {
    const int nx = g.nx, ny = g.ny;
    Plane out(f.size(), 0.0);
    for (int mx = -nx / 2; mx < nx / 2; ++mx)
        for (int my = -ny / 2; my < ny / 2; ++my) {
            std::complex<double> c = 0.0;
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j < ny; ++j)
                    c += f[i * ny + j] * std::polar(1.0, -(mx * g.x(i) + my * g.y(j)));
            c *= sym(mx, my) / double(nx * ny);
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j < ny; ++j) out[i * ny + j] += (c * std::polar(1.0, mx * g.x(i) + my * g.y(j))).real();
        }
    return out;
}

struct DenseOps {
    GridSpec g;

    double dk(int m, int n) const { return m == -n / 2 ? 0.0 : double(m); }
    bool keep(int mx, int my) const { return 3 * std::abs(mx) < g.nx && 3 * std::abs(my) < g.ny; }

    Plane layer(const Field& f, int c, int k) const {
        Plane p(g.columns());
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j) p[i * g.ny + j] = f(c, i, j, k);
        return p;
    }
    void set_layer(Field& f, int c, int k, const Plane& p) const {
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j) f(c, i, j, k) = p[i * g.ny + j];
    }
    Field per_layer(const Field& f, const Symbol& sym) const {
        Field out(g, f.components());
        for (int c = 0; c < f.components(); ++c)
            for (int k = 0; k < g.nz; ++k) set_layer(out, c, k, plane_apply(g, layer(f, c, k), sym));
        return out;
    }
    Field dx(const Field& f, int axis) const {
        return per_layer(f, [&](int mx, int my) {
            return std::complex<double>(0.0, axis == 0 ? dk(mx, g.nx) : dk(my, g.ny));
        });
    }
    Field dealias(const Field& f) const {
        return per_layer(f, [&](int mx, int my) { return std::complex<double>(keep(mx, my) ? 1.0 : 0.0); });
    }
    // Centred differences with ghost = factor * adjacent value.
    Field dz(const Field& f, double lo, double hi) const {
        Field out(g, f.components());
        const double h2 = 2.0 * g.dz();
        for (int c = 0; c < f.components(); ++c)
            for (int i = 0; i < g.nx; ++i)
                for (int j = 0; j < g.ny; ++j)
                    for (int k = 0; k < g.nz; ++k) {
                        const double up = k + 1 < g.nz ? f(c, i, j, k + 1) : hi * f(c, i, j, k);
                        const double dn = k > 0 ? f(c, i, j, k - 1) : lo * f(c, i, j, k);
                        out(c, i, j, k) = (up - dn) / h2;
                    }
        return out;
    }
    Field cumulative(const Field& f) const {
        Field out(g, f.components());
        const double d = g.dz();
        for (int c = 0; c < f.components(); ++c)
            for (int i = 0; i < g.nx; ++i)
                for (int j = 0; j < g.ny; ++j) {
                    out(c, i, j, 0) = d * (5.0 * f(c, i, j, 0) - f(c, i, j, 1)) / 8.0;
                    double acc = 0.0;
                    for (int k = 1; k < g.nz; ++k) {
                        acc += f(c, i, j, k - 1);
                        out(c, i, j, k) = d * (acc + (3.0 * f(c, i, j, k) + f(c, i, j, k - 1)) / 8.0);
                    }
                }
        return out;
    }
    Field project(const Field& v) const {
        Plane a0(g.columns(), 0.0), a1(g.columns(), 0.0);
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j)
                for (int k = 0; k < g.nz; ++k) {
                    a0[i * g.ny + j] += v(0, i, j, k) / g.nz;
                    a1[i * g.ny + j] += v(1, i, j, k) / g.nz;
                }
        // Q_H: k (k . a) / |k|^2 with the derivative symbol.
        auto q = [&](int comp) {
            auto part = [&](const Plane& a, int along) {
                return plane_apply(g, a, [&, along](int mx, int my) {
                    const double kx = dk(mx, g.nx), ky = dk(my, g.ny);
                    const double k2 = kx * kx + ky * ky;
                    if (k2 == 0.0) return std::complex<double>(0.0);
                    const double kc = comp == 0 ? kx : ky;
                    return std::complex<double>(kc * (along == 0 ? kx : ky) / k2);
                });
            };
            Plane r0 = part(a0, 0), r1 = part(a1, 1);
            for (std::size_t q = 0; q < r0.size(); ++q) r0[q] += r1[q];
            return r0;
        };
        Plane q0 = q(0), q1 = q(1);
        Field out = v;
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j)
                for (int k = 0; k < g.nz; ++k) {
                    out(0, i, j, k) -= q0[i * g.ny + j];
                    out(1, i, j, k) -= q1[i * g.ny + j];
                }
        return out;
    }
};

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    const std::uint32_t f = 0xffffffffu;
    CHECK(philox4x32({f, f, f, f}, {f, f}) == A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("noise stream is a pure function of its key and standard normal in distribution") {
    NoiseStream a(42, 3), b(42, 3), c(42, 4);
    CHECK(a.normal(17, 2) == b.normal(17, 2));
    CHECK(a.normal(17, 2) != c.normal(17, 2));
    CHECK(a.normal(17, 2) != a.normal(18, 2));
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double x = a.normal(k / 4, k % 4);
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / n) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("drift of the zero state is zero") {
    KraichnanParams kp;
    Model m = base_model(small_grid());
    m.noise = build_kraichnan(kp, m.grid);
    m.kappa = KappaProfile::constant(m.grid, 1.0);
    Dynamics d(m, NoiseMode::Ito);
    State z = d.drift(m.zero_state());
    CHECK(z.v.max_abs() == 0.0);
    CHECK(z.theta.max_abs() == 0.0);
}

TEST_CASE("drift with v = 0 reduces to the projected buoyancy term") {
    Model m = base_model(small_grid());
    m.kappa = KappaProfile::constant(m.grid, 1.0);
    Dynamics d(m, NoiseMode::Ito);
    State s = m.zero_state();
    s.theta = Field::sample(m.grid, 1, m.temperature_bc(), [](int, double x, double, double) { return std::cos(x); });
    State r = d.drift(s);
    // grad_H int_{-h}^z cos x = -sin x (z + h); P removes the vertical mean (h/2) sin x.
    Field ref = Field::sample(m.grid, 2, {}, [&](int c, double x, double, double z) {
        return c == 0 ? -std::sin(x) * (z + m.grid.h - 0.5 * m.grid.h) : 0.0;
    });
    CHECK(max_abs_diff(r.v, ref) < 1e-6);
    CHECK(r.theta.max_abs() < 1e-12);
}

TEST_CASE("drift matches a dense direct evaluation at 8x8x8") {
    Model m = base_model(small_grid());
    m.kappa = KappaProfile::constant(m.grid, 1.0);
    Dynamics d(m, NoiseMode::Ito);
    State s = random_state(m, 11, 0.3);
    State r = d.drift(s);

    DenseOps D{m.grid};
    const double rt = ghost_factors(m.temperature_bc(), m.grid.dz()).hi;
    // w = -C(div v)
    Field div = D.dx(s.v.component_field(0), 0) + D.dx(s.v.component_field(1), 1);
    Field w = D.cumulative(div);
    w *= -1.0;
    auto advect = [&](const Field& u, double lo, double hi) {
        Field ux = D.dx(u, 0), uy = D.dx(u, 1), uz = D.dz(u, lo, hi);
        Field out(m.grid, u.components());
        for (int c = 0; c < u.components(); ++c)
            for (std::size_t p = 0; p < m.grid.points(); ++p)
                out.component(c)[p] = -(s.v.component(0)[p] * ux.component(c)[p] +
                                        s.v.component(1)[p] * uy.component(c)[p] + w.values()[p] * uz.component(c)[p]);
        return D.dealias(out);
    };
    Field ev = advect(s.v, 1.0, 1.0);
    Field ct = D.cumulative(s.theta);
    ev.set_component(0, ev.component_field(0) + D.dx(ct, 0));
    ev.set_component(1, ev.component_field(1) + D.dx(ct, 1));
    ev = D.project(ev);
    Field et = advect(s.theta, 1.0, rt);

    CHECK(max_abs_diff(r.v, ev) < 1e-8);
    CHECK(max_abs_diff(r.theta, et) < 1e-8);
}

TEST_CASE("diffusion: constants give zero, constant phi differentiates, affine offsets pass through P") {
    const GridSpec g = small_grid();
    Model m = base_model(g, 1);
    const double c = 0.7;
    for (auto& x : m.noise.phi[0].component(0)) x = c;
    Dynamics d(m, NoiseMode::Ito);

    State k = m.zero_state();
    k.v.fill(1.5);
    k.theta.fill(-0.5);
    State b0 = d.diffusion(k, 0);
    CHECK(b0.v.max_abs() < 1e-14);
    CHECK(b0.theta.max_abs() < 1e-14);

    State s = m.zero_state();
    s.v = Field::sample(g, 2, m.velocity_bc(), [](int comp, double x, double, double) { return comp == 1 ? std::sin(x) : 0.0; });
    State b = d.diffusion(s, 0);
    Field ref = Field::sample(g, 2, {}, [&](int comp, double x, double, double) { return comp == 1 ? c * std::cos(x) : 0.0; });
    CHECK(max_abs_diff(b.v, ref) < 1e-8);

    Model ma = base_model(g, 1);
    ma.forcing.noise.resize(1);
    ma.forcing.noise[0].offset_v = random_field(g, 2, 5);
    Dynamics da(ma, NoiseMode::Ito);
    State ba = da.diffusion(ma.zero_state(), 0);
    CHECK(max_abs_diff(ba.v, hydrostatic_project(ma.forcing.noise[0].offset_v)) == 0.0);
}

TEST_CASE("one diffusive step of a shear mode decays like exp(-lambda dt) up to O(dt^2)") {
    Model m = base_model(small_grid());
    Dynamics d(m, NoiseMode::Ito);
    State s = m.zero_state();
    s.v = Field::sample(m.grid, 2, m.velocity_bc(), [](int c, double, double y, double) { return c == 0 ? std::sin(y) : 0.0; });
    s = m.admissible(s);
    for (double dt : {0.1, 0.05, 0.025}) {
        State r = step_skeleton(d, s, dt, {});
        const double ratio = r.v(0, 0, 2, 3) / s.v(0, 0, 2, 3);
        CHECK(std::abs(ratio - std::exp(-dt)) <= dt * dt);
    }
}

TEST_CASE("degenerate problems coincide bit for bit") {
    KraichnanParams kp;
    Model m = base_model(small_grid());
    m.noise = build_kraichnan(kp, m.grid);
    m.kappa = KappaProfile::constant(m.grid, 0.5);
    Dynamics d(m, NoiseMode::Ito);
    State x0 = random_state(m, 3, 0.2);
    IntegratorConfig cfg;
    cfg.dt = 1.0 / 32;
    const double T = 0.125;
    NoiseStream ns(9, 0);
    ControlPath zero = ControlPath::zeros(step_count(T, cfg.dt), m.noise.size(), cfg.dt);

    Trajectory skel = integrate(d, Problem::Skeleton, x0, T, cfg, &zero);
    Trajectory spde0 = integrate(d, Problem::Spde, x0, T, cfg, nullptr, &ns);
    CHECK(bit_equal(skel.final_state(), spde0.final_state()));

    ControlPath phi = zero;
    for (std::size_t q = 0; q < phi.values.size(); ++q) phi.values[q] = std::sin(0.3 * q);
    Trajectory sk = integrate(d, Problem::Skeleton, x0, T, cfg, &phi);
    Trajectory ti0 = integrate(d, Problem::Tilted, x0, T, cfg, &phi, &ns);
    CHECK(bit_equal(sk.final_state(), ti0.final_state()));

    cfg.eps = 0.1;
    Trajectory spde = integrate(d, Problem::Spde, x0, T, cfg, nullptr, &ns);
    Trajectory tiz = integrate(d, Problem::Tilted, x0, T, cfg, &zero, &ns);
    CHECK(bit_equal(spde.final_state(), tiz.final_state()));
    CHECK(!bit_equal(spde.final_state(), skel.final_state()));

    Trajectory again = integrate(d, Problem::Spde, x0, T, cfg, nullptr, &ns);
    CHECK(bit_equal(spde.final_state(), again.final_state()));
    NoiseStream other(10, 0);
    Trajectory diff = integrate(d, Problem::Spde, x0, T, cfg, nullptr, &other);
    CHECK(!bit_equal(spde.final_state(), diff.final_state()));
}

TEST_CASE("mode mismatch, budget and blowup errors") {
    KraichnanParams kp;
    Model m = base_model(small_grid());
    m.noise = build_kraichnan(kp, m.grid);
    CHECK_THROWS_AS(Dynamics(m, NoiseMode::Stratonovich), ModeMismatch);

    Dynamics d(m, NoiseMode::Ito);
    IntegratorConfig cfg;
    cfg.dt = 0.25;
    cfg.eps = 0.01;
    cfg.control_budget = 1.0;
    ControlPath phi = ControlPath::zeros(4, m.noise.size(), cfg.dt);
    phi.values.assign(phi.values.size(), 2.0);
    NoiseStream ns(1, 0);
    CHECK_THROWS_AS(integrate(d, Problem::Tilted, m.zero_state(), 1.0, cfg, &phi, &ns), ControlBudgetExceeded);

    State bad = random_state(m, 2, 1.0);
    bad.v(0, 1, 1, 1) = std::nan("");
    try {
        d.step(bad, 0.1, 0.0, {}, {}, 5);
        FAIL("expected blowup");
    } catch (const BlowupDetected& e) {
        CHECK(e.term() == "drift");
        CHECK(e.step() == 5);
    }

    IntegratorConfig tight;
    tight.dt = 0.25;
    tight.blowup_factor = 1e-3;
    ControlPath z = ControlPath::zeros(4, m.noise.size(), tight.dt);
    CHECK_THROWS_AS(integrate(d, Problem::Skeleton, random_state(m, 4, 1.0), 1.0, tight, &z), BlowupDetected);
}

TEST_CASE("T = 0 returns the initial state; heat decay is monotone and P holds each step") {
    Model m = base_model(small_grid(16, 16, 8));
    Dynamics d(m, NoiseMode::Ito);
    State x0 = harmonic_state(m, 1, 2, 0.5, 0.5);
    IntegratorConfig cfg;
    cfg.dt = 1.0 / 64;
    ControlPath none = ControlPath::zeros(0, 0, cfg.dt);
    Trajectory t0 = integrate(d, Problem::Skeleton, x0, 0.0, cfg, &none);
    REQUIRE(t0.states.size() == 1);
    CHECK(max_abs_diff(t0.states[0].v, x0.v) < 1e-14);
    CHECK(max_abs_diff(t0.states[0].theta, x0.theta) < 1e-14);

    ControlPath z = ControlPath::zeros(32, 0, cfg.dt);
    Trajectory tr = integrate(d, Problem::Skeleton, x0, 0.5, cfg, &z);
    CHECK(tr.states.size() == 33);
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
        const Field& v = tr.states[k].v;
        CHECK(norm_l2(v) <= norm_l2(tr.states[k - 1].v) * (1 + 1e-12));
        const double res = surface_w(v).max_abs();
        CHECK(res <= 1e-8 * std::max(norm_l2(v), 1e-300));
    }
}

TEST_CASE("linear skeleton response matches the discrete Duhamel sum") {
    Model m = base_model(small_grid(), 1);
    const double sigma = 1e-3;
    m.forcing.noise.resize(1);
    m.forcing.noise[0].offset_v =
        Field::sample(m.grid, 2, {}, [&](int c, double x, double, double) { return c == 1 ? sigma * std::cos(x) : 0.0; });
    Dynamics d(m, NoiseMode::Ito);
    IntegratorConfig cfg;
    cfg.dt = 1.0 / 32;
    const int N = 32;
    ControlPath phi = ControlPath::zeros(N, 1, cfg.dt);
    for (int k = 0; k < N; ++k) phi.at(k, 0) = 0.5;
    Trajectory tr = integrate(d, Problem::Skeleton, m.zero_state(), 1.0, cfg, &phi);
    // v2 = sum_n dt phi sigma r^{N-n} cos x,  r = 1/(1 + dt)
    const double r = 1.0 / (1.0 + cfg.dt);
    double amp = 0.0;
    for (int n = 0; n < N; ++n) amp += cfg.dt * 0.5 * sigma * std::pow(r, N - n);
    const Field& v = tr.final_state().v;
    CHECK(std::abs(v(1, 0, 0, 0) - amp) <= 1e-4 * amp);
    CHECK(std::abs(v(0, 3, 1, 2)) <= 1e-4 * amp);
}

TEST_CASE("vector-Jacobian products are transposes of the linearizations") {
    KraichnanParams kp;
    kp.gamma_amplitude = 0.3;
    Model m = base_model(small_grid());
    m.noise = build_kraichnan(kp, m.grid);
    m.kappa = KappaProfile::constant(m.grid, 0.8);
    m.forcing.v.A = {{{0.1, -0.2}, {0.3, 0.05}}};
    m.forcing.v.b = {0.2, -0.1};
    m.forcing.v.C[0][2][1] = 0.05;
    m.forcing.v.C[1][0][0] = -0.07;
    m.forcing.theta.a = {0.1, 0.2};
    m.forcing.theta.b = -0.3;
    m.forcing.theta.c[1][0] = 0.04;
    m.forcing.noise.resize(m.noise.size());
    for (auto& g : m.forcing.noise) {
        g.Gv = {{{0.1, 0.0}, {0.02, -0.1}}};
        g.gv = {0.05, 0.0};
        g.gt = 0.1;
    }
    Dynamics d(m, NoiseMode::Ito);
    State x = random_state(m, 21, 0.5);
    State dx = random_state(m, 22, 1.0);
    State cot{random_field(m.grid, 2, 23), random_field(m.grid, 1, 24)};

    const double h = 1e-4;
    State xp = x, xm = x;
    xp.axpy(h, dx);
    xm.axpy(-h, dx);
    State jd = d.drift(xp) - d.drift(xm);
    jd *= 1.0 / (2 * h);
    const double lhs = dot(jd, cot);
    const double rhs = dot(dx, d.drift_vjp(x, cot));
    CHECK(std::abs(lhs - rhs) <= 1e-7 * std::max(1.0, std::abs(lhs)));

    for (int n = 0; n < m.noise.size(); ++n) {
        State jb = d.diffusion(xp, n) - d.diffusion(xm, n);
        jb *= 1.0 / (2 * h);
        const double l = dot(jb, cot);
        const double r = dot(dx, d.diffusion_vjp(x, n, cot));
        CHECK(std::abs(l - r) <= 1e-8 * std::max(1.0, std::abs(l)));
    }

    State a{random_field(m.grid, 2, 31, m.velocity_bc()), random_field(m.grid, 1, 32, m.temperature_bc())};
    State b{random_field(m.grid, 2, 33, m.velocity_bc()), random_field(m.grid, 1, 34, m.temperature_bc())};
    const double ab = dot(d.solve_implicit(a, 0.05), b);
    const double ba = dot(a, d.solve_implicit(b, 0.05));
    CHECK(std::abs(ab - ba) <= 1e-11 * std::abs(ab));
}

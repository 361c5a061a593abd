#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <json.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hydroldp/energy.hpp"
#include "hydroldp/errors.hpp"
#include "hydroldp/ldp.hpp"
#include "test_support.hpp"

using namespace hydroldp;
using namespace hydroldp::testing;

namespace {

Model kraichnan_model(const GridSpec& g, double gamma = 0.0) {
    Model m;
    m.grid = g;
    KraichnanParams kp;
    kp.gamma_amplitude = gamma;
    m.noise = build_kraichnan(kp, g);
    return m;
}

State random_state(const Model& m, unsigned seed, double amp) {
    State s{random_smooth_field(m.grid, 2, seed), random_smooth_field(m.grid, 1, seed + 7)};
    s.v *= amp;
    s.theta *= amp;
    return m.admissible(std::move(s));
}

ControlPath random_control(int steps, int modes, double dt, std::uint64_t seed, double amp) {
    ControlPath c = ControlPath::zeros(steps, modes, dt);
    NoiseStream ns(seed, 99);
    for (int k = 0; k < steps; ++k)
        for (int n = 0; n < modes; ++n) c.at(k, n) = amp * ns.normal(k, n);
    return c;
}

double fd_gradient_error(const RateProblem& p, const ControlPath& phi, double mu) {
    const auto ev = p.evaluate(phi, mu, true);
    const double h = 1e-5;
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < phi.values.size(); ++i) {
        ControlPath a = phi, b = phi;
        a.values[i] += h;
        b.values[i] -= h;
        const double fd = (p.evaluate(a, mu, false).J - p.evaluate(b, mu, false).J) / (2 * h);
        err = std::max(err, std::abs(fd - ev.grad.values[i]));
        scale = std::max(scale, std::abs(fd));
    }
    return err / scale;
}

}  // namespace

TEST_CASE("L-BFGS minimizes the Rosenbrock function") {
    ObjectiveFn f = [](const std::vector<double>& x, std::vector<double>& g) {
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        g = {-2 * a - 400 * x[0] * b, 200 * b};
        return a * a + 100 * b * b;
    };
    LbfgsOptions o;
    o.max_iterations = 500;
    auto r = lbfgs_minimize(f, {-1.2, 1.0}, o);
    CHECK(r.converged);
    CHECK(std::abs(r.x[0] - 1) < 1e-5);
    CHECK(std::abs(r.x[1] - 1) < 1e-5);
}

TEST_CASE("adjoint gradient matches central differences") {
    Model m = kraichnan_model(small_grid(), 0.2);
    m.forcing.v.A = {{{0.1, -0.2}, {0.3, 0.05}}};
    m.forcing.theta.b = -0.3;
    Dynamics d(m, NoiseMode::Ito);
    const State x0 = random_state(m, 3, 0.5);
    const double dt = 1.0 / 64;
    const int steps = 16;

    SUBCASE("terminal set") {
        RareEvent e;
        e.kind = EventKind::TerminalSetDistance;
        e.delta = 0.05;
        e.target = random_state(m, 11, 0.3);
        RateProblem p(d, x0, steps * dt, dt, e);
        const auto phi = random_control(steps, p.modes(), dt, 5, 0.5);
        CHECK(fd_gradient_error(p, phi, 10.0) <= 1e-4);
    }
    SUBCASE("exceed in H") {
        RareEvent e;
        e.delta = 2.0;
        RateProblem p(d, x0, steps * dt, dt, e);
        const auto phi = random_control(steps, p.modes(), dt, 6, 0.5);
        CHECK(fd_gradient_error(p, phi, 10.0) <= 1e-4);
    }
    SUBCASE("exceed in MR") {
        RareEvent e;
        e.norm = EventNorm::MR;
        e.delta = 2.0;
        RateProblem p(d, x0, steps * dt, dt, e);
        const auto phi = random_control(steps, p.modes(), dt, 7, 0.5);
        CHECK(fd_gradient_error(p, phi, 10.0) <= 1e-4);
    }
}

TEST_CASE("without penalty the gradient is phi dt and phi = 0 reproduces the reference") {
    Model m = kraichnan_model(small_grid());
    Dynamics d(m, NoiseMode::Ito);
    RareEvent e;
    e.delta = 1.0;
    RateProblem p(d, random_state(m, 4, 0.3), 0.25, 1.0 / 32, e);
    const auto phi = random_control(p.steps(), p.modes(), p.dt(), 8, 1.0);
    const auto ev = p.evaluate(phi, 0.0, true);
    for (std::size_t i = 0; i < phi.values.size(); ++i) CHECK(ev.grad.values[i] == phi.values[i] * p.dt());
    CHECK(ev.cost == doctest::Approx(phi.cost()).epsilon(1e-14));

    const auto tr = p.forward(ControlPath::zeros(p.steps(), p.modes(), p.dt()));
    CHECK(p.distance(tr) == 0.0);
    CHECK_FALSE(p.occurs(tr));
}

TEST_CASE("events and options are validated") {
    Model m = kraichnan_model(small_grid());
    Dynamics d(m, NoiseMode::Ito);
    RareEvent e;
    e.delta = 0.0;
    CHECK_THROWS_AS(RateProblem(d, m.zero_state(), 0.25, 1.0 / 32, e), InvalidArgument);
    e.delta = 1.0;
    e.kind = EventKind::TerminalSetDistance;
    e.norm = EventNorm::MR;
    CHECK_THROWS_AS(RateProblem(d, m.zero_state(), 0.25, 1.0 / 32, e), InvalidArgument);
    e.norm = EventNorm::H;
    RateProblem p(d, m.zero_state(), 0.25, 1.0 / 32, e);
    CHECK_THROWS_AS(p.evaluate(ControlPath::zeros(3, p.modes(), p.dt()), 1.0), InvalidArgument);
    McOptions o;
    o.samples = 0;
    CHECK_THROWS_AS(mc_small_noise(p, o), InvalidArgument);
    o.samples = 4;
    o.eps = {0.0};
    CHECK_THROWS_AS(mc_small_noise(p, o), InvalidArgument);
}

TEST_CASE("rate of a linear single-mode problem matches the discrete LQ value") {
    OuReduction ou(small_grid(), 1.0, 1.0 / 32);
    RateProblem p1(ou.dynamics(), ou.model().zero_state(), ou.T(), ou.dt(), ou.exceed_event(1.0));
    RateProblem p2(ou.dynamics(), ou.model().zero_state(), ou.T(), ou.dt(), ou.exceed_event(2.0));
    const auto r1 = minimize_rate(p1);
    const auto r2 = minimize_rate(p2);
    REQUIRE(r1.converged);
    REQUIRE(r2.converged);
    const double exact = 1.0 / (2.0 * ou.variance_factor());
    CHECK(std::abs(r1.I / exact - 1.0) <= 0.05);
    CHECK(std::abs(r2.I / (4 * exact) - 1.0) <= 0.05);
    CHECK(std::abs(r2.I / r1.I - 4.0) <= 0.4);
    // The optimal control is the time-reversed impulse response r^(N-k).
    const double r = 1.0 / (1.0 + ou.dt());
    const int N = p1.steps();
    CHECK(r1.phi.at(N - 1, 0) / r1.phi.at(0, 0) == doctest::Approx(std::pow(r, 1 - N)).epsilon(0.02));
}

TEST_CASE("a terminal ball that already contains the deterministic endpoint costs nothing") {
    OuReduction ou(small_grid(4, 4, 3), 1.0, 1.0 / 16);
    RateProblem p(ou.dynamics(), ou.model().zero_state(), ou.T(), ou.dt(), ou.band_event(0.5, 1.0));
    const auto r = minimize_rate(p);
    CHECK(r.converged);
    CHECK(r.I == 0.0);
}

TEST_CASE("the minimizer never returns more than a feasible starting control") {
    Model m = kraichnan_model(small_grid());
    Dynamics d(m, NoiseMode::Ito);
    const State x0 = random_state(m, 12, 0.4);
    const double dt = 1.0 / 32;
    const auto gen = random_control(8, m.noise.size(), dt, 13, 1.0);
    RareEvent e;
    e.kind = EventKind::TerminalSetDistance;
    RateProblem probe(d, x0, 8 * dt, dt, e);
    e.target = probe.forward(gen).final_state();
    e.delta = 0.05 * std::sqrt(h_norm2(*e.target - probe.reference().final_state()));
    RateProblem p(d, x0, 8 * dt, dt, e);
    RateOptions o;
    o.inner.max_iterations = 30;
    const auto r = minimize_rate(p, o, &gen);
    CHECK(r.converged);
    CHECK(r.I <= gen.cost());
    CHECK(r.residual <= o.residual_tol);
}

TEST_CASE("scaling the noise by delta and the control by 1/delta leaves the skeleton unchanged") {
    Model m = kraichnan_model(small_grid());
    Model ms = m;
    ms.noise = m.noise.scaled(0.5);
    Dynamics d(m, NoiseMode::Ito), ds(ms, NoiseMode::Ito);
    const State x0 = random_state(m, 14, 0.4);
    const double dt = 1.0 / 32;
    RareEvent e;
    e.delta = 0.3;
    RateProblem p(d, x0, 0.25, dt, e), ps(ds, x0, 0.25, dt, e);

    const auto phi = random_control(p.steps(), p.modes(), dt, 15, 1.0);
    auto phis = phi;
    for (auto& v : phis.values) v *= 2.0;
    const auto a = p.forward(phi).final_state(), b = ps.forward(phis).final_state();
    CHECK(std::sqrt(h_norm2(a - b)) <= 1e-8 * std::sqrt(h_norm2(a)));

    auto init = random_control(p.steps(), p.modes(), dt, 16, 0.2);
    auto inits = init;
    for (auto& v : inits.values) v *= 2.0;
    const auto r = minimize_rate(p, {}, &init), rs = minimize_rate(ps, {}, &inits);
    REQUIRE(r.converged);
    REQUIRE(rs.converged);
    CHECK(r.I > 0.0);
    CHECK(std::abs(rs.I / r.I - 4.0) <= 0.08);
}

TEST_CASE("Wilson interval and isotonic fit") {
    auto [lo, hi] = wilson_interval(0, 100);
    CHECK(lo == 0.0);
    CHECK(hi == doctest::Approx(0.0370).epsilon(1e-3));
    std::tie(lo, hi) = wilson_interval(50, 100);
    CHECK(lo == doctest::Approx(0.4038).epsilon(1e-3));
    CHECK(hi == doctest::Approx(0.5962).epsilon(1e-3));

    const auto y = isotonic_fit({1, 3, 2, 4, 0, 5});
    const std::vector<double> want{1, 2.25, 2.25, 2.25, 2.25, 5};
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(want[i]));
}

TEST_CASE("skeleton a-priori check finds a monotone envelope") {
    Model m = kraichnan_model(small_grid());
    Dynamics d(m, NoiseMode::Ito);
    RareEvent e;
    RateProblem p(d, random_state(m, 17, 0.3), 0.25, 1.0 / 32, e);
    const auto base = random_control(p.steps(), p.modes(), p.dt(), 18, 1.0);
    std::vector<ControlPath> cs;
    for (double s : {4.0, 0.0, 1.0, 2.0}) {
        auto c = base;
        for (auto& v : c.values) v *= s;
        cs.push_back(c);
    }
    const auto rep = skeleton_apriori_check(p, cs);
    CHECK(rep.all_finite);
    CHECK(rep.rows.front().control_norm == 0.0);
    for (std::size_t i = 1; i < rep.envelope.size(); ++i) CHECK(rep.envelope[i] >= rep.envelope[i - 1]);
    CHECK(rep.slope > 0.0);
}

TEST_CASE("naive Monte Carlo on the OU reduction matches the exact Gaussian probability") {
    OuReduction ou(small_grid(4, 4, 3), 1.0, 1.0 / 32);
    RateProblem p(ou.dynamics(), ou.model().zero_state(), ou.T(), ou.dt(), ou.band_event(1.0, 0.6));
    McOptions o;
    o.eps = {0.4, 0.2};
    o.samples = 2000;
    o.seed = 7;
    const auto rep = mc_small_noise(p, o, ou.band_rate(1.0, 0.6));
    REQUIRE(rep.rows.size() == 2);
    for (const auto& row : rep.rows) {
        const double exact = ou.band_probability(row.eps, 1.0, 0.6);
        CHECK(std::abs(row.p_hat - exact) <= 3.0 * std::sqrt(exact * (1 - exact) / row.samples));
        CHECK(row.ci_lo <= row.p_hat);
        CHECK(row.p_hat <= row.ci_hi);
    }
}

TEST_CASE("tilted estimator is unbiased and a vanishing threshold is hit surely") {
    OuReduction ou(small_grid(4, 4, 3), 1.0, 1.0 / 32);
    RateProblem p(ou.dynamics(), ou.model().zero_state(), ou.T(), ou.dt(), ou.band_event(1.0, 0.6));
    const auto rate = minimize_rate(p);
    REQUIRE(rate.converged);
    CHECK(rate.I == doctest::Approx(ou.band_rate(1.0, 0.6)).epsilon(0.02));

    const double eps = 0.05, exact = ou.band_probability(eps, 1.0, 0.6);
    std::vector<double> est;
    for (int rep = 0; rep < 20; ++rep) {
        McOptions o;
        o.eps = {eps};
        o.samples = 200;
        o.seed = 100 + rep;
        o.tilt = &rate.phi;
        est.push_back(mc_small_noise(p, o).rows[0].p_hat);
    }
    double mean = 0.0, var = 0.0;
    for (double v : est) mean += v / est.size();
    for (double v : est) var += (v - mean) * (v - mean) / (est.size() - 1);
    CHECK(std::abs(mean - exact) <= 3.0 * std::sqrt(var / est.size()));
    CHECK(std::sqrt(var) / mean < 0.5);

    RareEvent tiny = ou.exceed_event(1e-12);
    RateProblem pt(ou.dynamics(), ou.model().zero_state(), ou.T(), ou.dt(), tiny);
    McOptions o;
    o.eps = {0.1};
    o.samples = 64;
    CHECK(mc_small_noise(pt, o).rows[0].p_hat == 1.0);
}

TEST_CASE("zero hits raise the tilt flag and the report is independent of the thread count") {
    OuReduction ou(small_grid(4, 4, 3), 1.0, 1.0 / 32);
    RateProblem p(ou.dynamics(), ou.model().zero_state(), ou.T(), ou.dt(), ou.exceed_event(5.0));
    McOptions o;
    o.eps = {0.05, 0.1};
    o.samples = 64;
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    std::ostringstream a, b;
    write_ldp_report(a, mc_small_noise(p, o, 1.0), "h");
    omp_set_num_threads(3);
    const auto rep = mc_small_noise(p, o, 1.0);
    write_ldp_report(b, rep, "h");
    omp_set_num_threads(saved);
    CHECK(a.str() == b.str());
    CHECK(rep.rows[0].hits == 0);
    CHECK(rep.rows[0].use_tilt);
    CHECK(a.str().find("\"use tilt\"") != std::string::npos);
    CHECK(a.str().find("-inf") == std::string::npos);
    std::istringstream in(a.str());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        CHECK(nlohmann::json::accept(line));
        ++lines;
    }
    CHECK(lines == 3);
}

TEST_CASE("trend fit recovers an exact model") {
    std::vector<McRow> rows;
    for (double e : {0.4, 0.2, 0.1, 0.05}) {
        McRow r;
        r.eps = e;
        r.eps_log_p = -0.7 + 0.3 * e - 0.2 * e * std::log(e);
        r.eps_log_p_se = 0.01;
        r.ci_lo = 0.5;
        r.ci_hi = 0.6;
        rows.push_back(r);
    }
    const auto t = fit_trend(rows);
    REQUIRE(t.ok);
    CHECK(t.intercept == doctest::Approx(-0.7).epsilon(1e-10));
    CHECK(t.c1 == doctest::Approx(0.3).epsilon(1e-8));
    CHECK(t.c2 == doctest::Approx(-0.2).epsilon(1e-8));
    CHECK(t.intercept_se > 0.0);
}

TEST_CASE("control JSON round trip") {
    const auto c = random_control(5, 3, 0.125, 19, 1.0);
    const std::string path = "test_ldp_control.json";
    {
        std::ofstream out(path);
        write_control_json(out, c, "abc", 1.5);
    }
    const auto r = read_control_json(path);
    CHECK(r.steps == 5);
    CHECK(r.modes == 3);
    CHECK(r.dt == 0.125);
    CHECK(r.values == c.values);
    CHECK_THROWS_AS(read_control_json("does_not_exist.json"), IoError);
    {
        std::ofstream out(path);
        out << "{\"dt\":0.1,\"steps\":2,\"modes\":2,\"values\":[[1,2]]}";
    }
    CHECK_THROWS_AS(read_control_json(path), IoError);
    std::remove(path.c_str());
}

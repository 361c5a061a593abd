#include "hydroldp/verify.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "hydroldp/energy.hpp"
#include "hydroldp/errors.hpp"
#include "hydroldp/hydrostatic.hpp"
#include "hydroldp/io.hpp"
#include "hydroldp/spectral.hpp"
#include "hydroldp/vertical.hpp"

namespace hydroldp {

using std::numbers::pi;

bool VerifyReport::all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const VerifyItem& i) { return i.pass; });
}

const VerifyItem* VerifyReport::find(const std::string& id) const {
    for (const auto& i : items)
        if (i.id == id) return &i;
    return nullptr;
}

void VerifyReport::append(const VerifyReport& other) { items.insert(items.end(), other.items.begin(), other.items.end()); }

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& r) { return static_cast<double>(r() >> 11) * 0x1.0p-53; }

int uniform_int(std::mt19937_64& r, int lo, int hi) {
    return lo + static_cast<int>(uniform(r) * (hi - lo + 1)) % (hi - lo + 1);
}

double sq(const Field& f) { return inner_l2(f, f); }

double plane_inner(const BarotropicField& a, const BarotropicField& b) {
    double s = 0.0;
    for (std::size_t q = 0; q < a.values().size(); ++q) s += a.values()[q] * b.values()[q];
    return s * a.grid().dx() * a.grid().dy();
}

double plane_diff_norm(const BarotropicField& a, const BarotropicField& b) {
    double s = 0.0;
    for (std::size_t q = 0; q < a.values().size(); ++q) s += (a.values()[q] - b.values()[q]) * (a.values()[q] - b.values()[q]);
    return std::sqrt(s * a.grid().dx() * a.grid().dy());
}

BarotropicField plane_minus(BarotropicField a, const BarotropicField& b) {
    for (std::size_t q = 0; q < a.values().size(); ++q) a.values()[q] -= b.values()[q];
    return a;
}

VerifyItem item(std::string id, std::string desc, double value, double threshold) {
    return {std::move(id), std::move(desc), value, threshold, value <= threshold};
}

// Discrete Laplacian with the field's own ghosts, as used by the implicit solve.
Field laplacian(const Field& f) {
    Field out = horizontal_derivative(horizontal_derivative(f, 0), 0);
    out += horizontal_derivative(horizontal_derivative(f, 1), 1);
    out += vertical_second_derivative(f);
    return out;
}

double h1_sq(const Field& v) { return sq(v) + gradient_energy(v); }

}  // namespace

Field random_white_field(const GridSpec& g, int components, std::uint64_t seed, BoundaryCondition bc) {
    auto rng = make_rng(seed, 0x5eed);
    std::normal_distribution<double> n01;
    Field f(g, components, bc);
    for (auto& v : f.values()) v = n01(rng);
    return f;
}

State random_packet_state(const Model& m, std::uint64_t seed, int packets) {
    const GridSpec& g = m.grid;
    auto rng = make_rng(seed, 0xc0e7);
    const int kx = std::max(0, (g.nx - 1) / 3), ky = std::max(0, (g.ny - 1) / 3);
    auto packet = [&](int comps, BoundaryCondition bc, bool robin) {
        Field f(g, comps, bc);
        for (int p = 0; p < packets; ++p) {
            const int mx = uniform_int(rng, -kx, kx), my = uniform_int(rng, 0, ky), l = uniform_int(rng, 0, g.nz - 1);
            const double amp = (uniform(rng) < 0.5 ? -1.0 : 1.0) * std::exp(2.0 * uniform(rng) - 1.0);
            const double phase = 2.0 * pi * uniform(rng), shift = robin ? 0.5 * uniform(rng) : 0.0;
            const double ax = 2.0 * pi / g.lx * mx, ay = 2.0 * pi / g.ly * my, az = pi * l / g.h;
            const int c = uniform_int(rng, 0, comps - 1);
            f += Field::sample(g, comps, bc, [&](int cc, double x, double y, double z) {
                return cc == c ? amp * std::cos(ax * x + ay * y + phase) * std::cos(az * (z + g.h) + shift) : 0.0;
            });
        }
        return f;
    };
    State s{packet(2, m.velocity_bc(), false), packet(1, m.temperature_bc(), true)};
    s.theta *= std::exp(4.0 * uniform(rng) - 2.0);
    return m.admissible(std::move(s));
}

VerifyReport projection_suite(const GridSpec& g, int samples, std::uint64_t seed) {
    double idem = 0.0, adj = 0.0, ann = 0.0, grad = 0.0;
    const auto nbc = BoundaryCondition::neumann();
    for (int s = 0; s < samples; ++s) {
        const Field a = random_white_field(g, 2, seed + 2 * s, nbc);
        const Field b = random_white_field(g, 2, seed + 2 * s + 1, nbc);
        Field pa = hydrostatic_project(a);
        pa.set_bc(nbc);
        Field pb = hydrostatic_project(b);
        idem = std::max(idem, norm_l2(hydrostatic_project(pa) - pa) / norm_l2(pa));
        adj = std::max(adj, std::abs(inner_l2(pa, b) - inner_l2(a, pb)) / (norm_l2(a) * norm_l2(b)));

        // Solenoidal plane field from a stream function: rotated gradient.
        BarotropicField psi = vertical_average(random_white_field(g, 1, seed + 7919 + s));
        BarotropicField gr = barotropic_gradient(psi);
        BarotropicField sol(g, 2);
        const std::size_t n = g.columns();
        for (std::size_t q = 0; q < n; ++q) {
            sol.values()[q] = -gr.values()[n + q];
            sol.values()[n + q] = gr.values()[q];
        }
        ann = std::max(ann, std::sqrt(plane_inner(q_h(sol), q_h(sol)) / plane_inner(sol, sol)));

        for (int j = 0; j < 3; ++j) {
            auto d = [&](const Field& f) { return j < 2 ? horizontal_derivative(f, j) : vertical_derivative(f); };
            grad = std::max(grad, norm_l2(d(pa)) / norm_l2(d(a)));
        }
    }
    VerifyReport r;
    r.items.push_back(item("projection_idempotent", "max |PPf - Pf| / |Pf|", idem, 1e-10));
    r.items.push_back(item("projection_self_adjoint", "max |<Pa,b> - <a,Pb>| / |a||b|", adj, 1e-10));
    r.items.push_back(item("qh_annihilates_solenoidal", "max |Q_H s| / |s| on rotated gradients", ann, 1e-10));
    r.items.push_back(item("projection_gradient_bound", "max_j |d_j Pf| / |d_j f|", grad, 1.0 + 1e-8));
    return r;
}

VerifyReport structural_suite(const GridSpec& g, int samples, std::uint64_t seed) {
    double bar = 0.0, tilde = 0.0, dzw = 0.0, top = 0.0, pyth = 0.0;
    const auto nbc = BoundaryCondition::neumann();
    for (int s = 0; s < samples; ++s) {
        const Field f = random_white_field(g, 2, seed + 3 * s, nbc);
        Field pf = hydrostatic_project(f);
        pf.set_bc(nbc);
        const BarotropicField fbar = vertical_average(f);
        const BarotropicField lhs = vertical_average(pf);
        const BarotropicField rhs = plane_minus(fbar, q_h(fbar));
        bar = std::max(bar, plane_diff_norm(lhs, rhs) / std::sqrt(plane_inner(fbar, fbar)));
        const Field tf = f - lift(fbar);
        const Field tpf = pf - lift(lhs);
        tilde = std::max(tilde, norm_l2(tpf - tf) / norm_l2(tf));

        top = std::max(top, surface_w(pf).max_abs() / norm_l2(pf));
        const double total = sq(pf);
        const BarotropicField pbar = vertical_average(pf);
        pyth = std::max(pyth, std::abs(total - g.h * plane_inner(pbar, pbar) - sq(tpf)) / total);

        // d_z w = -div v, checked on constrained fields affine in z where the cumulative rule is exact.
        const Field a = random_white_field(g, 2, seed + 3 * s + 1), b = random_white_field(g, 2, seed + 3 * s + 2);
        const BarotropicField abar = vertical_average(a), bbar = vertical_average(b);
        Field aff(g, 2, nbc);
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < g.nx; ++i)
                for (int j = 0; j < g.ny; ++j)
                    for (int k = 0; k < g.nz; ++k) aff(c, i, j, k) = abar(c, i, j) + bbar(c, i, j) * g.z(k);
        Field v = hydrostatic_project(aff);
        v.set_bc(nbc);
        const Field w = diagnostic_w(v);
        const Field div = horizontal_divergence(v);
        double err = 0.0, scale = 0.0;
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j)
                for (int k = 1; k + 1 < g.nz; ++k) {
                    const double d = (w(0, i, j, k + 1) - w(0, i, j, k - 1)) / (2.0 * g.dz());
                    err = std::max(err, std::abs(d + div(0, i, j, k)));
                    scale = std::max(scale, std::abs(div(0, i, j, k)));
                }
        dzw = std::max(dzw, err / std::max(scale, 1e-300));
    }
    VerifyReport r;
    r.items.push_back(item("bar_commutes", "max |bar(Pf) - P_H bar f| / |bar f|", bar, 1e-10));
    r.items.push_back(item("tilde_invariant", "max |tilde(Pf) - tilde f| / |tilde f|", tilde, 1e-10));
    r.items.push_back(item("dz_w_equals_minus_div", "max |d_z w + div v| / max|div v|", dzw, 1e-10));
    r.items.push_back(item("surface_w", "max |w(., 0)| / |v|", top, 1e-10));
    r.items.push_back(item("bar_tilde_pythagoras", "max |(|v|^2 - h|bar v|^2 - |tilde v|^2)| / |v|^2", pyth, 1e-10));
    return r;
}

VerifyReport assumption_items(const NoiseFamily& fam) {
    VerifyReport r;
    const AssumptionReport a = check_assumptions(fam);
    for (const auto& it : a.items) r.items.push_back({"assumption_" + it.id, it.description, it.value, it.threshold, it.pass});
    return r;
}

VerifyReport turbulent_pressure_check(const NoiseFamily& fam, std::uint64_t seed) {
    VerifyReport r;
    if (!fam.has_gamma()) return r;
    const GridSpec& g = fam.grid;
    const int nx = g.nx, ny = g.ny, N = nx * ny;
    auto d1 = [&](int n, double L) {
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) D(i, j) = 0.5 * std::pow(-1.0, i - j) / std::tan(0.5 * (i - j) * 2.0 * pi / n) * 2.0 * pi / L;
        return D;
    };
    const Eigen::MatrixXd Dx = d1(nx, g.lx), Dy = d1(ny, g.ly);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * N, N);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            for (int m = 0; m < nx; ++m) G(i * ny + j, m * ny + j) = Dx(i, m);
            for (int m = 0; m < ny; ++m) G(N + i * ny + j, i * ny + m) = Dy(j, m);
        }
    const Eigen::MatrixXd Q = G * (G.transpose() * G).completeOrthogonalDecomposition().pseudoInverse() * G.transpose();

    Field v = dealias(random_white_field(g, 2, seed));
    v.set_bc(BoundaryCondition::neumann());
    const Field got = turbulent_pressure(fam, v);
    Eigen::VectorXd ref = Eigen::VectorXd::Zero(2 * N);
    for (int n = 0; n < fam.size(); ++n) {
        const BarotropicField t = vertical_average(transport(fam.phi[n], v));
        Eigen::VectorXd tv(2 * N);
        for (int q = 0; q < 2 * N; ++q) tv[q] = t.values()[q];
        const Eigen::VectorXd qt = Q * tv;
        const BarotropicField gam = vertical_average(fam.gamma[n]);
        for (int q = 0; q < N; ++q)
            for (int l = 0; l < 2; ++l)
                for (int m = 0; m < 2; ++m) ref[l * N + q] += gam.values()[(2 * l + m) * N + q] * qt[m * N + q];
    }
    double err = 0.0, scale = ref.cwiseAbs().maxCoeff();
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                for (int k = 0; k < g.nz; ++k) err = std::max(err, std::abs(got(c, i, j, k) - ref[c * N + i * ny + j]));
    r.items.push_back(item("turbulent_pressure_dense_oracle", "max |P_gamma - dense| / max|dense|", err / std::max(scale, 1e-300), 1e-8));
    return r;
}

CoercivitySample coercivity_sample(const Dynamics& d, const State& x) {
    CoercivitySample s;
    State neg = x;
    neg *= -1.0;
    // Linear part of the explicit drift: the quadratic transport cancels in the odd part.
    State lin = d.drift(x) - d.drift(neg);
    lin *= 0.5;
    if (d.mode() == NoiseMode::Stratonovich) lin += d.correction(x);
    const Field lv = laplacian(x.v), lt = laplacian(x.theta);
    Field av = lv + lin.v;
    av *= -1.0;
    Field at = lt + lin.theta;
    at *= -1.0;
    Field hv = x.v - lv;  // H^1 pairing <a, v>_{H^1} = <a, v - Lap v>
    s.q_v = inner_l2(av, hv);
    s.q_t = inner_l2(at, x.theta);
    for (int n = 0; n < d.noise_modes(); ++n) {
        State bn = d.diffusion(x, n) - d.diffusion(neg, n);
        bn *= 0.5;
        bn.v.set_bc(BoundaryCondition::neumann());
        s.q_v -= 0.5 * h1_sq(bn.v);
        s.q_t -= 0.5 * sq(bn.theta);
    }
    s.H_v = h1_sq(x.v);
    s.V_v = s.H_v + second_derivative_energy(x.v);
    s.H_t = sq(x.theta);
    s.V_t = s.H_t + gradient_energy(x.theta);
    return s;
}

void fit_coercivity(const std::vector<CoercivitySample>& data, double C0, double& nu, double& M) {
    const std::size_t n = data.size();
    std::vector<double> q(n), t(n);
    double mq = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = data[i];
        const double V = s.V_v + C0 * s.V_t;
        q[i] = (s.q_v + C0 * s.q_t) / V;
        t[i] = (s.H_v + C0 * s.H_t) / V;
        mq += q[i] / n;
        mt += t[i] / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (t[i] - mt) * (q[i] - mq);
        sxx += (t[i] - mt) * (t[i] - mt);
    }
    M = sxx > 0.0 ? std::max(0.0, -sxy / sxx) : 0.0;
    nu = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) nu = std::min(nu, q[i] + M * t[i]);
}

CoercivityFit coercivity_fit(const Model& m, int samples, std::uint64_t seed) {
    if (samples < 3) throw InvalidArgument("coercivity fit needs at least 3 samples");
    const Dynamics d(m, m.noise.size() > 0 ? m.noise.mode : NoiseMode::Ito);
    CoercivityFit fit;
    fit.samples = samples;
    for (int s = 0; s < samples; ++s) fit.data.push_back(coercivity_sample(d, random_packet_state(m, seed + s)));
    fit.nu_hat = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 60; ++i) {
        const double C0 = std::pow(10.0, -3.0 + 0.1 * i);
        double nu = 0.0, M = 0.0;
        fit_coercivity(fit.data, C0, nu, M);
        if (nu > fit.nu_hat) {
            fit.nu_hat = nu;
            fit.M_hat = M;
            fit.C0 = C0;
        }
    }
    fit.pass = fit.nu_hat > 0.0;
    return fit;
}

double loglog_slope(const std::vector<double>& h, const std::vector<double>& e) {
    if (h.size() != e.size() || h.size() < 2) throw InvalidArgument("slope needs at least two matching points");
    const double n = static_cast<double>(h.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        mx += std::log(h[i]) / n;
        my += std::log(e[i]) / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double dx = std::log(h[i]) - mx;
        sxy += dx * (std::log(e[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

State heun_stratonovich_step(const Dynamics& d, const State& x, double dt, double eps, std::span<const double> xi) {
    const double sq_dt = std::sqrt(eps * dt);
    const int nm = d.noise_modes();
    const State e0 = d.drift(x);
    std::vector<State> b0;
    for (int n = 0; n < nm; ++n) b0.push_back(d.diffusion(x, n));
    State pred = x;
    pred.axpy(dt, e0);
    for (int n = 0; n < nm; ++n) pred.axpy(sq_dt * xi[n], b0[n]);
    pred = d.solve_implicit(pred, dt);

    State y = x;
    y.axpy(0.5 * dt, e0);
    y.axpy(0.5 * dt, d.drift(pred));
    for (int n = 0; n < nm; ++n) {
        y.axpy(0.5 * sq_dt * xi[n], b0[n]);
        y.axpy(0.5 * sq_dt * xi[n], d.diffusion(pred, n));
    }
    State out = d.solve_implicit(y, dt);
    if (!out.all_finite()) throw BlowupDetected("heun_reference", -1, 0.0);
    return out;
}

ConvergenceStudy ito_stratonovich_study(const Dynamics& strat, const State& x0, double T, const std::vector<int>& steps,
                                        double eps, int paths, std::uint64_t seed) {
    if (strat.mode() != NoiseMode::Stratonovich) throw ModeMismatch("Ito-Stratonovich study needs Stratonovich dynamics");
    ConvergenceStudy st;
    const int nm = strat.noise_modes();
    const State start = strat.model().admissible(x0);
    for (int N : steps) {
        const double dt = T / N;
        double err2 = 0.0, ref2 = 0.0;
        for (int p = 0; p < paths; ++p) {
            const NoiseStream ns(seed, static_cast<std::uint64_t>(p));
            State a = start, b = start;
            std::vector<double> xi(nm);
            for (int k = 0; k < N; ++k) {
                for (int n = 0; n < nm; ++n) xi[n] = ns.normal(static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(n));
                a = strat.step(a, dt, eps, {}, xi, k);
                b = heun_stratonovich_step(strat, b, dt, eps, xi);
            }
            const State diff = a - b;
            err2 += dot(diff, diff);
            ref2 += dot(b, b);
        }
        st.h.push_back(dt);
        st.error.push_back(std::sqrt(err2 / ref2));
    }
    st.slope = loglog_slope(st.h, st.error);
    return st;
}

ConvergenceStudy skeleton_time_study(const Dynamics& d, const State& x0, double T, const std::vector<int>& steps,
                                     const std::function<double(double, int)>& control) {
    auto endpoint = [&](int N) {
        const double dt = T / N;
        ControlPath c = ControlPath::zeros(N, d.noise_modes(), dt);
        for (int k = 0; k < N; ++k)
            for (int n = 0; n < c.modes; ++n) c.at(k, n) = control(k * dt, n);
        IntegratorConfig cfg;
        cfg.dt = dt;
        cfg.mode = d.mode();
        cfg.save_every = N;
        return integrate(d, Problem::Skeleton, x0, T, cfg, &c).final_state();
    };
    ConvergenceStudy st;
    State prev = endpoint(steps.front());
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
        State next = endpoint(steps[i + 1]);
        const State diff = prev - next;
        st.h.push_back(T / steps[i]);
        st.error.push_back(std::sqrt(h_norm2(diff)));
        prev = std::move(next);
    }
    st.slope = loglog_slope(st.h, st.error);
    return st;
}

ConvergenceStudy heat_space_study(GridSpec g, double alpha, double T, double dt, const std::vector<int>& nz) {
    // mu tan(mu h) = alpha on (0, pi / (2h)).
    double lo = 0.0, hi = 0.5 * pi / g.h;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mid * std::tan(mid * g.h) < alpha ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    const double kx = 2.0 * pi / g.lx, lz = pi / g.h;
    const double lam_v = kx * kx + lz * lz, lam_t = kx * kx + mu * mu;
    ConvergenceStudy st;
    for (int n : nz) {
        g.nz = n;
        Model m;
        m.grid = g;
        m.alpha = alpha;
        m.noise = NoiseFamily::zero(g, 0);
        const Dynamics d(m, NoiseMode::Ito);
        const State x{Field::sample(g, 2, m.velocity_bc(),
                              [&](int c, double x, double, double z) { return c == 1 ? std::cos(kx * x) * std::cos(lz * (z + g.h)) : 0.0; }),
                Field::sample(g, 1, m.temperature_bc(),
                              [&](int, double x, double, double z) { return std::cos(kx * x) * std::cos(mu * (z + g.h)); })};
        const State x0 = x;
        IntegratorConfig cfg;
        cfg.dt = dt;
        cfg.save_every = step_count(T, dt);
        const int N = step_count(T, dt);
        const ControlPath none = ControlPath::zeros(N, 0, dt);
        const State xT = integrate(d, Problem::Skeleton, x, T, cfg, &none).final_state();
        State exact = x0;
        exact.v *= std::pow(1.0 + dt * lam_v, -N);
        exact.theta *= std::pow(1.0 + dt * lam_t, -N);
        const State diff = xT - exact;
        st.h.push_back(g.dz());
        st.error.push_back(std::sqrt(inner_l2(diff.v, diff.v) + inner_l2(diff.theta, diff.theta)) /
                           std::sqrt(inner_l2(exact.v, exact.v) + inner_l2(exact.theta, exact.theta)));
    }
    st.slope = loglog_slope(st.h, st.error);
    return st;
}

void write_verify_table(std::ostream& out, const VerifyReport& r, const std::string& hash) {
    out << "# config_hash=" << hash << "\n";
    out << "check,value,threshold,pass,description\n";
    for (const auto& i : r.items)
        out << fmt::format("{},{},{},{},\"{}\"\n", i.id, fmt_double(i.value), fmt_double(i.threshold), i.pass ? 1 : 0,
                           i.description);
}

}  // namespace hydroldp

#include "hydroldp/integrator.hpp"

#include <cmath>

#include "hydroldp/errors.hpp"
#include "hydroldp/hydrostatic.hpp"
#include "hydroldp/kernels.hpp"
#include "hydroldp/spectral.hpp"
#include "hydroldp/vertical.hpp"

namespace hydroldp {

ControlPath ControlPath::zeros(int steps, int modes, double dt) {
    ControlPath c;
    c.dt = dt;
    c.steps = steps;
    c.modes = modes;
    c.values.assign(static_cast<std::size_t>(steps) * modes, 0.0);
    return c;
}

double ControlPath::cost() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return 0.5 * dt * s;
}

double ControlPath::norm_l2() const { return std::sqrt(2.0 * cost()); }

Dynamics::Dynamics(const Model& model, NoiseMode mode) : model_(&model), mode_(mode) {
    model.validate();
    if (model.noise.size() > 0 && model.noise.mode != mode)
        throw ModeMismatch(std::string("noise family is ") + to_string(model.noise.mode) + " but integrator is " +
                           to_string(mode));
    if (mode == NoiseMode::Stratonovich) corr_ = std::make_unique<CorrectionOperators>(model.noise, model.dealias);
}

std::array<Field, 3> Dynamics::velocity_gradient(const Field& v) const {
    return {horizontal_derivative(v, 0), horizontal_derivative(v, 1), vertical_derivative(v)};
}

namespace {

void add_scaled(std::span<double> o, double a, std::span<const double> s) {
    if (a == 0.0) return;
    for (std::size_t q = 0; q < o.size(); ++q) o[q] += a * s[q];
}

}  // namespace

void Dynamics::add_velocity_forcing(Field& out, const Field& v, const Field& theta) const {
    const VelocityForcing& f = model_->forcing.v;
    if (!f.xi.empty()) out += f.xi;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) add_scaled(out.component(i), f.A[i][j], v.component(j));
        add_scaled(out.component(i), f.b[i], theta.values());
    }
    if (model_->forcing.has_gradient_terms()) {
        auto g = velocity_gradient(v);
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 3; ++k)
                for (int j = 0; j < 2; ++j) add_scaled(out.component(i), f.C[i][k][j], g[k].component(j));
    }
}

void Dynamics::add_temperature_forcing(Field& out, const Field& v, const Field& theta) const {
    const TemperatureForcing& f = model_->forcing.theta;
    if (!f.xi.empty()) out += f.xi;
    for (int j = 0; j < 2; ++j) add_scaled(out.values(), f.a[j], v.component(j));
    add_scaled(out.values(), f.b, theta.values());
    if (model_->forcing.has_gradient_terms()) {
        auto g = velocity_gradient(v);
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 2; ++j) add_scaled(out.values(), f.c[k][j], g[k].component(j));
    }
}

std::vector<Field> Dynamics::noise_velocity_forcing(const Field& v) const {
    std::vector<Field> out;
    for (const auto& g : model_->forcing.noise) {
        Field f(v.grid(), 2);
        if (!g.offset_v.empty()) f += g.offset_v;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) add_scaled(f.component(i), g.Gv[i][j], v.component(j));
        out.push_back(std::move(f));
    }
    return out;
}

State Dynamics::drift(const State& x) const {
    const Model& m = *model_;
    Field U(m.grid, 3);
    std::copy(x.v.values().begin(), x.v.values().end(), U.values().begin());
    Field w = diagnostic_w(x.v);
    std::copy(w.values().begin(), w.values().end(), U.component(2).begin());

    Field sv = transport(U, x.v, m.dealias);
    sv *= -1.0;
    Field st = transport(U, x.theta, m.dealias);
    st *= -1.0;
    if (!m.kappa.kappa.empty()) sv += pressure_term(m.kappa, x.theta);
    if (m.noise.has_gamma()) {
        auto gv = noise_velocity_forcing(x.v);
        sv += turbulent_pressure(m.noise, x.v, &gv, m.dealias);
    }
    add_velocity_forcing(sv, x.v, x.theta);
    add_temperature_forcing(st, x.v, x.theta);
    return {hydrostatic_project(sv), std::move(st)};
}

State Dynamics::diffusion(const State& x, int n) const {
    const Model& m = *model_;
    Field bv = transport(m.noise.phi[n], x.v, m.dealias);
    Field bt = transport(m.noise.psi[n], x.theta, m.dealias);
    if (!m.forcing.noise.empty()) {
        const NoiseForcing& g = m.forcing.noise[n];
        bv += noise_velocity_forcing(x.v)[n];
        if (!g.offset_theta.empty()) bt += g.offset_theta;
        for (int j = 0; j < 2; ++j) add_scaled(bt.values(), g.gv[j], x.v.component(j));
        add_scaled(bt.values(), g.gt, x.theta.values());
    }
    return {hydrostatic_project(bv), std::move(bt)};
}

State Dynamics::correction(const State& x) const {
    if (!corr_) return {Field(x.v.grid(), 2), Field(x.theta.grid(), 1)};
    return {corr_->velocity_correction(x.v), corr_->temperature_correction(x.theta)};
}

namespace {

Field heat_solve(const Field& rhs, double dt, kernels::Ghosts g) {
    const GridSpec& grid = rhs.grid();
    SpectrumView s = forward_transform(rhs);
    std::vector<double> shift(s.columns());
    const int nky = grid.nky();
    std::size_t col = 0;
    for (int c = 0; c < rhs.components(); ++c)
        for (int ix = 0; ix < grid.nx; ++ix)
            for (int iy = 0; iy < nky; ++iy, ++col) shift[col] = dt * (s.kx(ix) * s.kx(ix) + s.ky(iy) * s.ky(iy));
    kernels::omp::implicit_heat_solve(s.values(), shift, {s.columns(), grid.nz}, g, dt / (grid.dz() * grid.dz()));
    return inverse_transform(s);
}

}  // namespace

State Dynamics::solve_implicit(const State& rhs, double dt) const {
    const Model& m = *model_;
    const double dz = m.grid.dz();
    Field v = hydrostatic_project(heat_solve(rhs.v, dt, ghost_factors(m.velocity_bc(), dz)));
    v.set_bc(m.velocity_bc());
    Field t = heat_solve(rhs.theta, dt, ghost_factors(m.temperature_bc(), dz));
    t.set_bc(m.temperature_bc());
    return {std::move(v), std::move(t)};
}

State Dynamics::step(const State& x, double dt, double eps, std::span<const double> control,
                     std::span<const double> xi, long step_index) const {
    const double time = step_index >= 0 ? step_index * dt : 0.0;
    // Overflow inside a term surfaces as a non-finite value or an InvalidField from a transform.
    auto guarded = [&](const std::string& term, auto&& fn) {
        State r;
        try {
            r = fn();
        } catch (const InvalidField&) {
            throw BlowupDetected(term, step_index, time);
        }
        if (!r.all_finite()) throw BlowupDetected(term, step_index, time);
        return r;
    };
    State y = x;
    y.axpy(dt, guarded("drift", [&] { return drift(x); }));
    if (mode_ == NoiseMode::Stratonovich && eps > 0.0)
        y.axpy(dt * eps, guarded("stratonovich_correction", [&] { return correction(x); }));
    const double sq = std::sqrt(eps * dt);
    for (int n = 0; n < noise_modes(); ++n) {
        double coef = 0.0;
        if (!control.empty()) coef += dt * control[n];
        if (!xi.empty() && eps > 0.0) coef += sq * xi[n];
        if (coef == 0.0) continue;
        y.axpy(coef, guarded("diffusion_mode_" + std::to_string(n), [&] { return diffusion(x, n); }));
    }
    return guarded("implicit_solve", [&] { return solve_implicit(y, dt); });
}

State Dynamics::drift_vjp(const State& x, const State& cot) const {
    const Model& m = *model_;
    const GridSpec& g = m.grid;
    const auto vbc = m.velocity_bc();
    const auto tbc = m.temperature_bc();
    const auto vg = ghost_factors(vbc, g.dz());
    Field rho = hydrostatic_project(cot.v);
    const Field& mt = cot.theta;

    Field U(g, 3);
    std::copy(x.v.values().begin(), x.v.values().end(), U.values().begin());
    Field w = diagnostic_w(x.v);
    std::copy(w.values().begin(), w.values().end(), U.component(2).begin());

    Field gv = transport_transpose(U, rho, vbc, m.dealias);
    gv *= -1.0;
    Field gt = transport_transpose(U, mt, tbc, m.dealias);
    gt *= -1.0;

    // Cotangent of the advecting field U = (v1, v2, w).
    Field rf = m.dealias ? dealias(rho) : rho;
    Field tf = m.dealias ? dealias(mt) : mt;
    auto dv = velocity_gradient(x.v);
    std::array<Field, 3> dth{horizontal_derivative(x.theta, 0), horizontal_derivative(x.theta, 1),
                             vertical_derivative(x.theta)};
    Field ubar(g, 3);
    for (int i = 0; i < 3; ++i) {
        auto o = ubar.component(i);
        for (int c = 0; c < 2; ++c) kernels::omp::multiply_accumulate(rf.component(c), dv[i].component(c), o, -1.0);
        kernels::omp::multiply_accumulate(tf.values(), dth[i].values(), o, -1.0);
    }
    for (int c = 0; c < 2; ++c) add_scaled(gv.component(c), 1.0, ubar.component(c));
    // w = -C div v  =>  v_bar += grad(C^T w_bar)
    gv += horizontal_gradient(cumulative_integral_transpose(ubar.component_field(2)));

    if (!m.kappa.kappa.empty()) gt += pressure_term_transpose(m.kappa, rho);

    if (m.noise.has_gamma()) {
        auto cn = turbulent_pressure_mode_cotangents(m.noise, rho);
        for (int n = 0; n < m.noise.size(); ++n) {
            gv += transport_transpose(m.noise.phi[n], cn[n], vbc, m.dealias);
            if (!m.forcing.noise.empty()) {
                const auto& G = m.forcing.noise[n].Gv;
                for (int j = 0; j < 2; ++j)
                    for (int i = 0; i < 2; ++i) add_scaled(gv.component(j), G[i][j], cn[n].component(i));
            }
        }
    }

    const VelocityForcing& fv = m.forcing.v;
    const TemperatureForcing& ft = m.forcing.theta;
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) add_scaled(gv.component(j), fv.A[i][j], rho.component(i));
        add_scaled(gv.component(j), ft.a[j], mt.values());
    }
    for (int i = 0; i < 2; ++i) add_scaled(gt.values(), fv.b[i], rho.component(i));
    add_scaled(gt.values(), ft.b, mt.values());
    if (m.forcing.has_gradient_terms()) {
        // Transposes of d_k: -d_k horizontally, the ghost-aware transpose vertically.
        auto dT = [&](const Field& f, int k) {
            if (k < 2) {
                Field r = horizontal_derivative(f, k);
                r *= -1.0;
                return r;
            }
            return vertical_derivative_transpose(f, vg);
        };
        for (int k = 0; k < 3; ++k) {
            Field tk = dT(mt, k);
            std::array<Field, 2> rk{dT(rho.component_field(0), k), dT(rho.component_field(1), k)};
            for (int j = 0; j < 2; ++j) {
                for (int i = 0; i < 2; ++i) add_scaled(gv.component(j), fv.C[i][k][j], rk[i].values());
                add_scaled(gv.component(j), ft.c[k][j], tk.values());
            }
        }
    }
    return {std::move(gv), std::move(gt)};
}

State Dynamics::diffusion_vjp(const State& x, int n, const State& cot) const {
    (void)x;  // B_n is affine, its Jacobian does not depend on x
    const Model& m = *model_;
    Field rho = hydrostatic_project(cot.v);
    Field gv = transport_transpose(m.noise.phi[n], rho, m.velocity_bc(), m.dealias);
    Field gt = transport_transpose(m.noise.psi[n], cot.theta, m.temperature_bc(), m.dealias);
    if (!m.forcing.noise.empty()) {
        const NoiseForcing& g = m.forcing.noise[n];
        for (int j = 0; j < 2; ++j) {
            for (int i = 0; i < 2; ++i) add_scaled(gv.component(j), g.Gv[i][j], rho.component(i));
            add_scaled(gv.component(j), g.gv[j], cot.theta.values());
        }
        if (g.gt != 0.0) gt.axpy(g.gt, cot.theta);
    }
    return {std::move(gv), std::move(gt)};
}

State step_spde(const Dynamics& d, const State& x, double dt, double eps, std::span<const double> xi) {
    return d.step(x, dt, eps, {}, xi);
}

State step_skeleton(const Dynamics& d, const State& x, double dt, std::span<const double> phi) {
    return d.step(x, dt, 0.0, phi, {});
}

State step_tilted(const Dynamics& d, const State& x, double dt, double eps, std::span<const double> phi,
                  std::span<const double> xi) {
    return d.step(x, dt, eps, phi, xi);
}

int step_count(double T, double dt) {
    if (!(dt > 0.0) || !(T >= 0.0)) throw SolverError("dt must be positive and T nonnegative");
    const double r = T / dt;
    const long n = std::lround(r);
    if ( std::abs(r - n) > 1e-9 * std::max(1.0, r)) throw SolverError("T must be a multiple of dt");
    return static_cast<int>(n);
}

Trajectory integrate(const Dynamics& d, Problem problem, const State& x0, double T, const IntegratorConfig& cfg,
                     const ControlPath* control, const NoiseStream* noise) {
    if (cfg.mode != d.mode()) throw ModeMismatch("integrator config mode differs from dynamics mode");
    const int steps = step_count(T, cfg.dt);
    const int nm = d.noise_modes();
    const bool needs_control = problem != Problem::Spde;
    const bool needs_noise = problem != Problem::Skeleton;
    if (needs_control && (!control || control->steps != steps || control->modes != nm))
        throw SolverError("control path does not match the step count or noise modes");
    if (needs_noise && !noise) throw SolverError("noise stream required");
    if (problem == Problem::Tilted && control->norm_l2() > cfg.control_budget)
        throw ControlBudgetExceeded(control->norm_l2(), cfg.control_budget);
    const double eps = problem == Problem::Skeleton ? 0.0 : cfg.eps;
    const int every = std::max(1, cfg.save_every);

    Trajectory tr;
    tr.dt = cfg.dt;
    tr.steps = steps;
    State x = d.model().admissible(x0);
    const double ref = std::max(std::sqrt(dot(x, x)), 1.0);
    tr.step_index.push_back(0);
    tr.times.push_back(0.0);
    tr.states.push_back(x);
    std::vector<double> xi(nm);
    for (int k = 0; k < steps; ++k) {
        std::span<const double> ctl;
        if (needs_control) ctl = control->step(k);
        std::span<const double> dw;
        if (needs_noise && eps > 0.0) {
            for (int n = 0; n < nm; ++n) xi[n] = noise->normal(static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(n));
            dw = xi;
        }
        x = d.step(x, cfg.dt, eps, ctl, dw, k);
        const double nrm = std::sqrt(dot(x, x));
        if (!(nrm <= cfg.blowup_factor * ref)) throw BlowupDetected("state_norm", k, (k + 1) * cfg.dt);
        if ((k + 1) % every == 0 || k + 1 == steps) {
            tr.step_index.push_back(k + 1);
            tr.times.push_back((k + 1) * cfg.dt);
            tr.states.push_back(x);
        }
    }
    return tr;
}

}  // namespace hydroldp

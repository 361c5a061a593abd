#include "hydroldp/model.hpp"

#include <cmath>
#include <numbers>

#include "hydroldp/errors.hpp"
#include "hydroldp/spectral.hpp"

namespace hydroldp {

State& State::operator+=(const State& o) {
    v += o.v;
    theta += o.theta;
    return *this;
}

State& State::operator-=(const State& o) {
    v -= o.v;
    theta -= o.theta;
    return *this;
}

State& State::operator*=(double s) {
    v *= s;
    theta *= s;
    return *this;
}

State& State::axpy(double a, const State& o) {
    v.axpy(a, o.v);
    theta.axpy(a, o.theta);
    return *this;
}

State operator+(State a, const State& b) { return a += b; }
State operator-(State a, const State& b) { return a -= b; }
double dot(const State& a, const State& b) { return dot(a.v, b.v) + dot(a.theta, b.theta); }

double ForcingSpec::growth_constant() const {
    double c = 0.0;
    for (const auto& row : v.A)
        for (double x : row) c += std::abs(x);
    for (double x : v.b) c += std::abs(x);
    for (const auto& m : v.C)
        for (const auto& row : m)
            for (double x : row) c += std::abs(x);
    for (double x : theta.a) c += std::abs(x);
    c += std::abs(theta.b);
    for (const auto& row : theta.c)
        for (double x : row) c += std::abs(x);
    if (!v.xi.empty()) c = std::max(c, norm_l2(v.xi));
    if (!theta.xi.empty()) c = std::max(c, norm_l2(theta.xi));
    for (const auto& g : noise) {
        double l = 0.0;
        for (const auto& row : g.Gv)
            for (double x : row) l += std::abs(x);
        l += std::abs(g.gv[0]) + std::abs(g.gv[1]) + std::abs(g.gt);
        c = std::max(c, l);
        if (!g.offset_v.empty()) c = std::max(c, norm_l2(g.offset_v));
        if (!g.offset_theta.empty()) c = std::max(c, norm_l2(g.offset_theta));
    }
    return c;
}

bool ForcingSpec::has_gradient_terms() const {
    for (const auto& m : v.C)
        for (const auto& row : m)
            for (double x : row)
                if (x != 0.0) return true;
    for (const auto& row : theta.c)
        for (double x : row)
            if (x != 0.0) return true;
    return false;
}

State Model::zero_state() const {
    return {Field(grid, 2, velocity_bc()), Field(grid, 1, temperature_bc())};
}

State Model::admissible(State s) const {
    if (s.v.grid() != grid || s.v.components() != 2) throw InvalidField("velocity must have 2 components on the model grid");
    if (s.theta.grid() != grid || s.theta.components() != 1) throw InvalidField("temperature must be scalar on the model grid");
    if (dealias) {
        dealias_in_place(s.v);
        dealias_in_place(s.theta);
    }
    s.v = hydrostatic_project(s.v);
    s.v.set_bc(velocity_bc());
    s.theta.set_bc(temperature_bc());
    return s;
}

void Model::validate() const {
    grid.validate();
    if (noise.grid != grid) throw InvalidField("noise family lives on a different grid");
    noise.validate_shapes();
    if (!forcing.noise.empty() && static_cast<int>(forcing.noise.size()) != noise.size())
        throw InvalidField("noise forcing must have one entry per noise mode");
    if (!kappa.kappa.empty()) kappa.validate();
    if (1.0 + 0.5 * alpha * grid.dz() <= 0.0) throw InvalidField("Robin coefficient too negative for this dz");
}

State harmonic_state(const Model& m, int kx, int ky, double v_amp, double theta_amp) {
    const GridSpec& g = m.grid;
    const double ax = 2.0 * std::numbers::pi * kx / g.lx;
    const double ay = 2.0 * std::numbers::pi * ky / g.ly;
    const double kn = std::hypot(ax, ay);
    State s = m.zero_state();
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double ph = ax * g.x(i) + ay * g.y(j);
            for (int k = 0; k < g.nz; ++k) {
                const double cz = std::cos(std::numbers::pi * (g.z(k) + g.h) / g.h);
                // Divergence-free horizontal shear with a baroclinic part.
                s.v(0, i, j, k) = kn > 0 ? -v_amp * (ay / kn) * std::sin(ph) * (1.0 + 0.5 * cz) : 0.0;
                s.v(1, i, j, k) = kn > 0 ? v_amp * (ax / kn) * std::sin(ph) * (1.0 + 0.5 * cz) : 0.0;
                s.theta(0, i, j, k) = theta_amp * std::cos(ph) * (1.0 + 0.25 * cz);
            }
        }
    return m.admissible(std::move(s));
}

}  // namespace hydroldp

#pragma once

#include "hydroldp/field.hpp"
#include "hydroldp/forcing.hpp"
#include "hydroldp/hydrostatic.hpp"
#include "hydroldp/noise.hpp"

namespace hydroldp {

// Velocity (2 components, Neumann) and temperature (1 component, Robin at the top).
struct State {
    Field v;
    Field theta;

    State& operator+=(const State& o);
    State& operator-=(const State& o);
    State& operator*=(double s);
    State& axpy(double a, const State& o);
    bool all_finite() const { return v.all_finite() && theta.all_finite(); }
};

State operator+(State a, const State& b);
State operator-(State a, const State& b);
double dot(const State& a, const State& b);

struct Model {
    GridSpec grid{};
    double alpha = 1.0;
    NoiseFamily noise;
    KappaProfile kappa;
    ForcingSpec forcing;
    bool dealias = true;

    BoundaryCondition velocity_bc() const { return BoundaryCondition::neumann(); }
    BoundaryCondition temperature_bc() const { return BoundaryCondition::robin(alpha); }
    State zero_state() const;
    // Attach boundary conditions, project v and apply the dealias filter.
    State admissible(State s) const;
    void validate() const;
};

// Rest state plus a single horizontal Fourier mode in each field.
State harmonic_state(const Model& m, int kx, int ky, double v_amp, double theta_amp);

}  // namespace hydroldp
